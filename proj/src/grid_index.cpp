#include "rubblevoid/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

CellCoord GridIndex::cell_of(double x, double y) const {
  return {static_cast<std::int64_t>(std::floor((x - origin_x_) / cell_size_)),
          static_cast<std::int64_t>(std::floor((y - origin_y_) / cell_size_))};
}

std::span<const std::uint32_t> GridIndex::bucket(CellCoord c) const {
  if (c.i < 0 || c.j < 0 || c.i >= nx_ || c.j >= ny_) return {};
  const auto k = static_cast<std::size_t>(c.j * nx_ + c.i);
  return std::span<const std::uint32_t>(ids_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

std::vector<CellCoord> GridIndex::occupied_cells() const {
  std::vector<CellCoord> out;
  out.reserve(non_empty_);
  for (std::int64_t j = 0; j < ny_; ++j) {
    for (std::int64_t i = 0; i < nx_; ++i) {
      const auto k = static_cast<std::size_t>(j * nx_ + i);
      if (offsets_[k + 1] > offsets_[k]) out.push_back({i, j});
    }
  }
  return out;
}

std::vector<std::uint32_t> GridIndex::query_cells(CellCoord lo, CellCoord hi) const {
  std::vector<std::uint32_t> out;
  const std::int64_t i0 = std::max<std::int64_t>(lo.i, 0), i1 = std::min<std::int64_t>(hi.i, nx_ - 1);
  const std::int64_t j0 = std::max<std::int64_t>(lo.j, 0), j1 = std::min<std::int64_t>(hi.j, ny_ - 1);
  for (std::int64_t j = j0; j <= j1; ++j) {
    for (std::int64_t i = i0; i <= i1; ++i) {
      auto b = bucket({i, j});
      out.insert(out.end(), b.begin(), b.end());
    }
  }
  return out;
}

std::optional<Neighbor> GridIndex::nearest(const Point3& q, double max_distance) const {
  if (points_.empty() || !(max_distance >= 0.0)) return std::nullopt;
  const double fx = (q.x - origin_x_) / cell_size_;
  const double fy = (q.y - origin_y_) / cell_size_;
  if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
  const auto ci = static_cast<std::int64_t>(std::floor(fx));
  const auto cj = static_cast<std::int64_t>(std::floor(fy));
  // Distance from q to the edges of its own cell, in meters.
  const double to_left = (fx - static_cast<double>(ci)) * cell_size_;
  const double to_bottom = (fy - static_cast<double>(cj)) * cell_size_;
  const double inner = std::min({to_left, cell_size_ - to_left, to_bottom, cell_size_ - to_bottom});

  // Rings beyond this radius cannot contain an index cell.
  const std::int64_t reach = std::max({std::abs(ci), std::abs(ci - (nx_ - 1)), std::abs(cj), std::abs(cj - (ny_ - 1))});

  double best_sq = max_distance * max_distance;
  std::optional<Neighbor> best;
  auto visit = [&](std::int64_t i, std::int64_t j) {
    for (std::uint32_t id : bucket({i, j})) {
      const double d2 = squared_distance(points_[id], q);
      if (d2 < best_sq || (d2 == best_sq && (!best || id < best->id))) {
        best_sq = d2;
        best = Neighbor{id, 0.0};
      }
    }
  };

  for (std::int64_t r = 0; r <= reach; ++r) {
    // Any cell on ring r is at least this far from q in XY.
    const double ring_lower = r == 0 ? 0.0 : inner + static_cast<double>(r - 1) * cell_size_;
    if (ring_lower * ring_lower > best_sq) break;
    if (r == 0) {
      visit(ci, cj);
      continue;
    }
    const std::int64_t i_lo = std::max(ci - r, std::int64_t{0}), i_hi = std::min(ci + r, nx_ - 1);
    const std::int64_t j_lo = std::max(cj - r, std::int64_t{0}), j_hi = std::min(cj + r, ny_ - 1);
    if (cj - r >= 0 && cj - r < ny_) {
      for (std::int64_t i = i_lo; i <= i_hi; ++i) visit(i, cj - r);
    }
    if (cj + r < ny_ && cj + r >= 0) {
      for (std::int64_t i = i_lo; i <= i_hi; ++i) visit(i, cj + r);
    }
    const std::int64_t jj_lo = std::max(cj - r + 1, j_lo), jj_hi = std::min(cj + r - 1, j_hi);
    if (ci - r >= 0 && ci - r < nx_) {
      for (std::int64_t j = jj_lo; j <= jj_hi; ++j) visit(ci - r, j);
    }
    if (ci + r < nx_ && ci + r >= 0) {
      for (std::int64_t j = jj_lo; j <= jj_hi; ++j) visit(ci + r, j);
    }
  }
  if (best) best->distance = std::sqrt(best_sq);
  return best;
}

GridIndex build_index(std::span<const Point3> points, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    fail(Errc::NonPositiveCell, "cell size must be positive, got " + std::to_string(cell_size));
  }
  if (points.size() >= std::numeric_limits<std::uint32_t>::max()) {
    fail(Errc::InvalidArgument, "too many points for a 32-bit index");
  }
  const Aabb box = bounding_box(points);
  GridIndex index;
  index.cell_size_ = cell_size;
  index.origin_x_ = box.min.x;
  index.origin_y_ = box.min.y;
  index.points_.assign(points.begin(), points.end());
  const auto span_x = static_cast<std::int64_t>(std::floor(box.extent_x() / cell_size)) + 1;
  const auto span_y = static_cast<std::int64_t>(std::floor(box.extent_y() / cell_size)) + 1;
  if (span_x <= 0 || span_y <= 0 || span_x > (std::int64_t{1} << 28) / std::max<std::int64_t>(span_y, 1)) {
    fail(Errc::InvalidArgument, "index grid too large for cell size " + std::to_string(cell_size));
  }
  index.nx_ = span_x;
  index.ny_ = span_y;
  const auto cells = static_cast<std::size_t>(span_x * span_y);
  std::vector<std::uint32_t> cell_of_point(points.size());
  index.offsets_.assign(cells + 1, 0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto c = index.cell_of(points[k].x, points[k].y);
    // Guards the floor() at the upper edge against rounding.
    c.i = std::clamp<std::int64_t>(c.i, 0, span_x - 1);
    c.j = std::clamp<std::int64_t>(c.j, 0, span_y - 1);
    cell_of_point[k] = static_cast<std::uint32_t>(c.j * span_x + c.i);
    ++index.offsets_[cell_of_point[k] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (index.offsets_[c + 1] > 0) ++index.non_empty_;
    index.offsets_[c + 1] += index.offsets_[c];
  }
  index.ids_.resize(points.size());
  std::vector<std::uint32_t> cursor(index.offsets_.begin(), index.offsets_.end() - 1);
  for (std::size_t k = 0; k < points.size(); ++k) {
    index.ids_[cursor[cell_of_point[k]]++] = static_cast<std::uint32_t>(k);
  }
  return index;
}

GridIndex build_index(const PointCloud& cloud, double cell_size) {
  return build_index(std::span<const Point3>(cloud.points), cell_size);
}

}  // namespace rubblevoid

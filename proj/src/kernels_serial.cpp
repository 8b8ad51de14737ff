#include <algorithm>
#include <cmath>
#include <limits>

#include "rubblevoid/kernels.hpp"

namespace rubblevoid::kernels::serial {

std::vector<std::optional<Neighbor>> nearest_neighbors(const GridIndex& index, std::span<const Point3> queries,
                                                       double max_distance) {
  std::vector<std::optional<Neighbor>> out(queries.size());
  const auto pts = index.points();
  const double limit = max_distance * max_distance;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    double best = limit;
    std::optional<Neighbor> found;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double d2 = squared_distance(pts[k], queries[q]);
      if (d2 < best || (d2 == best && !found)) {
        best = d2;
        found = Neighbor{static_cast<std::uint32_t>(k), 0.0};
      }
    }
    if (found) found->distance = std::sqrt(best);
    out[q] = found;
  }
  return out;
}

HeightField rasterize(std::span<const Point3> points, const GridSpec& grid, SurfaceRule rule) {
  HeightField hf = HeightField::empty(grid, Epoch{}, rule);
  for (const auto& p : points) {
    auto cell = grid.locate(p.x, p.y);
    if (!cell) continue;
    const std::size_t k = *cell;
    if (!hf.occupied[k]) {
      hf.elevation[k] = p.z;
      hf.occupied[k] = 1;
    } else if (rule == SurfaceRule::MaxZ) {
      hf.elevation[k] = std::max(hf.elevation[k], p.z);
    } else {
      hf.elevation[k] = std::min(hf.elevation[k], p.z);
    }
  }
  return hf;
}

std::vector<double> gap_map(const HeightField& earlier, const HeightField& later) {
  std::vector<double> gap(earlier.grid.cell_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < gap.size(); ++k) {
    if (earlier.occupied[k] && later.occupied[k]) gap[k] = earlier.elevation[k] - later.elevation[k];
  }
  return gap;
}

void transform_points(std::span<Point3> points, const double r[9], const double t[3]) {
  for (auto& p : points) {
    const Point3 q = p;
    p.x = r[0] * q.x + r[1] * q.y + r[2] * q.z + t[0];
    p.y = r[3] * q.x + r[4] * q.y + r[5] * q.z + t[1];
    p.z = r[6] * q.x + r[7] * q.y + r[8] * q.z + t[2];
  }
}

}  // namespace rubblevoid::kernels::serial

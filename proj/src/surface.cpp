#include "rubblevoid/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "rubblevoid/error.hpp"
#include "rubblevoid/kernels.hpp"

namespace rubblevoid {

using nlohmann::json;

void GridSpec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    fail(Errc::NonPositiveCell, "grid cell size must be positive");
  }
  if (nx < 1 || ny < 1) fail(Errc::InvalidArgument, "grid needs at least one cell per axis");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) fail(Errc::InvalidArgument, "grid origin not finite");
}

GridSpec GridSpec::covering(const Aabb& region, double cell_size) {
  GridSpec g;
  g.origin_x = region.min.x;
  g.origin_y = region.min.y;
  g.cell_size = cell_size;
  // Tolerates extents that are an exact multiple of the cell size up to rounding.
  g.nx = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(region.extent_x() / cell_size - 1e-9)));
  g.ny = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(region.extent_y() / cell_size - 1e-9)));
  g.validate();
  return g;
}

std::string_view to_string(SurfaceRule r) { return r == SurfaceRule::MaxZ ? "MAX_Z" : "MIN_Z"; }

HeightField HeightField::empty(const GridSpec& grid, Epoch epoch, SurfaceRule rule) {
  grid.validate();
  HeightField hf;
  hf.grid = grid;
  hf.elevation.assign(grid.cell_count(), 0.0);
  hf.occupied.assign(grid.cell_count(), 0);
  hf.interpolated.assign(grid.cell_count(), 0);
  hf.epoch = epoch;
  hf.rule = rule;
  return hf;
}

std::size_t HeightField::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

HeightField rasterize_dsm(const PointCloud& cloud, const GridSpec& grid, SurfaceRule rule) {
  if (cloud.empty()) fail(Errc::EmptyCloud, "cannot rasterize an empty cloud");
  grid.validate();
  HeightField hf = kernels::rasterize(cloud.points, grid, rule);
  hf.epoch = cloud.epoch;
  return hf;
}

HeightField fill_holes(const HeightField& hf, int max_hole_radius) {
  if (max_hole_radius < 0) fail(Errc::InvalidArgument, "hole radius must be non-negative");
  if (hf.occupied_count() == 0) fail(Errc::AllUnoccupied, "height field has no occupied cell");
  HeightField out = hf;
  if (max_hole_radius == 0) return out;

  struct Offset {
    int di, dj;
    double weight;
  };
  std::vector<Offset> stencil;
  const int r = max_hole_radius;
  for (int dj = -r; dj <= r; ++dj) {
    for (int di = -r; di <= r; ++di) {
      const int d2 = di * di + dj * dj;
      if (d2 == 0 || d2 > r * r) continue;
      stencil.push_back({di, dj, 1.0 / static_cast<double>(d2)});
    }
  }

  const GridSpec& g = hf.grid;
  const auto observed = [&](std::size_t k) { return hf.occupied[k] && !hf.interpolated[k]; };
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t j = 0; j < g.ny; ++j) {
    for (std::int64_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.linear(i, j);
      if (hf.occupied[k]) continue;
      double wsum = 0.0, vsum = 0.0;
      for (const auto& s : stencil) {
        const std::int64_t ii = i + s.di, jj = j + s.dj;
        if (!g.contains(ii, jj)) continue;
        const std::size_t kk = g.linear(ii, jj);
        if (!observed(kk)) continue;
        wsum += s.weight;
        vsum += s.weight * hf.elevation[kk];
      }
      if (wsum > 0.0) {
        out.elevation[k] = vsum / wsum;
        out.occupied[k] = 1;
        out.interpolated[k] = 1;
      }
    }
  }
  return out;
}

EpochStack build_stack(std::vector<HeightField> layers, double ground_elevation) {
  if (layers.empty()) fail(Errc::InvalidArgument, "stack needs at least one layer");
  if (!std::isfinite(ground_elevation)) fail(Errc::InvalidArgument, "ground elevation must be finite");
  const GridSpec& g = layers.front().grid;
  for (const auto& l : layers) {
    if (!(l.grid == g)) fail(Errc::GridMismatch, "layers do not share one grid");
    if (l.elevation.size() != g.cell_count() || l.occupied.size() != g.cell_count()) {
      fail(Errc::GridMismatch, "layer storage does not match its grid");
    }
  }
  std::stable_sort(layers.begin(), layers.end(),
                   [](const HeightField& a, const HeightField& b) { return a.epoch < b.epoch; });
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k].epoch == layers[k - 1].epoch) {
      fail(Errc::DuplicateEpoch, "two layers at epoch " + format_epoch(layers[k].epoch));
    }
  }
  for (auto& l : layers) {
    if (l.interpolated.size() != l.occupied.size()) l.interpolated.assign(l.occupied.size(), 0);
  }
  return EpochStack{std::move(layers), ground_elevation};
}

DepthMap pile_depth(const EpochStack& stack) {
  if (stack.layers.empty()) fail(Errc::InvalidArgument, "empty stack");
  const HeightField& top = stack.layers.front();
  DepthMap d;
  d.grid = top.grid;
  d.depth.assign(top.grid.cell_count(), 0.0);
  d.occupied = top.occupied;
  for (std::size_t k = 0; k < d.depth.size(); ++k) {
    if (!top.occupied[k]) continue;
    d.depth[k] = std::max(0.0, top.elevation[k] - stack.ground_elevation);
    d.max_depth = std::max(d.max_depth, d.depth[k]);
  }
  return d;
}

double ground_datum(const HeightField& layer, const std::optional<Aabb>& footprint) {
  std::vector<double> outside, all;
  const GridSpec& g = layer.grid;
  for (std::int64_t j = 0; j < g.ny; ++j) {
    for (std::int64_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.linear(i, j);
      if (!layer.occupied[k]) continue;
      all.push_back(layer.elevation[k]);
      if (footprint && !footprint->contains_xy(g.center_x(i), g.center_y(j))) outside.push_back(layer.elevation[k]);
    }
  }
  auto& pool = outside.empty() ? all : outside;
  if (pool.empty()) fail(Errc::AllUnoccupied, "no occupied cell to derive a ground datum from");
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(pool.size())));
  const std::size_t idx = rank == 0 ? 0 : rank - 1;
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(idx), pool.end());
  return pool[idx];
}

std::string heightfield_to_pgm(const HeightField& hf) {
  const GridSpec& g = hf.grid;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < hf.elevation.size(); ++k) {
    if (!hf.occupied[k]) continue;
    lo = std::min(lo, hf.elevation[k]);
    hi = std::max(hi, hf.elevation[k]);
  }
  std::string out = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
  out.reserve(out.size() + g.cell_count());
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::int64_t j = g.ny - 1; j >= 0; --j) {
    for (std::int64_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.linear(i, j);
      if (!hf.occupied[k]) {
        out.push_back(0);
        continue;
      }
      const double t = (hf.elevation[k] - lo) / span;
      out.push_back(static_cast<char>(1 + static_cast<int>(std::lround(t * 254.0))));
    }
  }
  return out;
}

std::string heightfield_to_json(const HeightField& hf) {
  json j;
  j["grid"] = {{"origin", {hf.grid.origin_x, hf.grid.origin_y}},
               {"cell_size", hf.grid.cell_size},
               {"nx", hf.grid.nx},
               {"ny", hf.grid.ny}};
  j["epoch"] = format_epoch(hf.epoch);
  j["rule"] = std::string(to_string(hf.rule));
  json elev = json::array();
  json interp = json::array();
  for (std::size_t k = 0; k < hf.elevation.size(); ++k) {
    elev.push_back(hf.occupied[k] ? json(hf.elevation[k]) : json(nullptr));
    if (!hf.interpolated.empty() && hf.interpolated[k]) interp.push_back(k);
  }
  j["elevation"] = std::move(elev);
  j["interpolated"] = std::move(interp);
  return j.dump();
}

HeightField heightfield_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    GridSpec g;
    g.origin_x = j.at("grid").at("origin").at(0).get<double>();
    g.origin_y = j.at("grid").at("origin").at(1).get<double>();
    g.cell_size = j.at("grid").at("cell_size").get<double>();
    g.nx = j.at("grid").at("nx").get<std::int64_t>();
    g.ny = j.at("grid").at("ny").get<std::int64_t>();
    const auto rule = j.at("rule").get<std::string>() == "MIN_Z" ? SurfaceRule::MinZ : SurfaceRule::MaxZ;
    HeightField hf = HeightField::empty(g, parse_epoch(j.at("epoch").get<std::string>()), rule);
    const auto& elev = j.at("elevation");
    if (elev.size() != g.cell_count()) fail(Errc::InvalidArgument, "elevation array does not match grid");
    for (std::size_t k = 0; k < elev.size(); ++k) {
      if (elev[k].is_null()) continue;
      hf.elevation[k] = elev[k].get<double>();
      hf.occupied[k] = 1;
    }
    for (const auto& k : j.value("interpolated", json::array())) hf.interpolated.at(k.get<std::size_t>()) = 1;
    return hf;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("bad height field JSON: ") + e.what());
  }
}

}  // namespace rubblevoid

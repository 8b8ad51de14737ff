#include "rubblevoid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

namespace rubblevoid::kernels {

std::vector<std::optional<Neighbor>> nearest_neighbors(const GridIndex& index, std::span<const Point3> queries,
                                                       double max_distance) {
  std::vector<std::optional<Neighbor>> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 1024)
  for (std::int64_t q = 0; q < n; ++q) {
    out[static_cast<std::size_t>(q)] = index.nearest(queries[static_cast<std::size_t>(q)], max_distance);
  }
  return out;
}

HeightField rasterize(std::span<const Point3> points, const GridSpec& grid, SurfaceRule rule) {
  HeightField hf = HeightField::empty(grid, Epoch{}, rule);
  const bool take_max = rule == SurfaceRule::MaxZ;
  const double init = take_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  const std::size_t cells = grid.cell_count();
  const auto n = static_cast<std::int64_t>(points.size());
  std::vector<double> merged(cells, init);

#pragma omp parallel
  {
    std::vector<double> local(cells, init);
#pragma omp for schedule(static) nowait
    for (std::int64_t k = 0; k < n; ++k) {
      const auto& p = points[static_cast<std::size_t>(k)];
      auto cell = grid.locate(p.x, p.y);
      if (!cell) continue;
      double& v = local[*cell];
      v = take_max ? std::max(v, p.z) : std::min(v, p.z);
    }
#pragma omp critical(rasterize_merge)
    for (std::size_t c = 0; c < cells; ++c) {
      merged[c] = take_max ? std::max(merged[c], local[c]) : std::min(merged[c], local[c]);
    }
  }

  const auto m = static_cast<std::int64_t>(cells);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < m; ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (std::isfinite(merged[k])) {
      hf.elevation[k] = merged[k];
      hf.occupied[k] = 1;
    }
  }
  return hf;
}

std::vector<double> gap_map(const HeightField& earlier, const HeightField& later) {
  const std::size_t cells = earlier.grid.cell_count();
  std::vector<double> gap(cells, std::numeric_limits<double>::quiet_NaN());
  const auto m = static_cast<std::int64_t>(cells);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < m; ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (earlier.occupied[k] && later.occupied[k]) gap[k] = earlier.elevation[k] - later.elevation[k];
  }
  return gap;
}

void transform_points(std::span<Point3> points, const double r[9], const double t[3]) {
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k) {
    auto& p = points[static_cast<std::size_t>(k)];
    const Point3 q = p;
    p.x = r[0] * q.x + r[1] * q.y + r[2] * q.z + t[0];
    p.y = r[3] * q.x + r[4] * q.y + r[5] * q.z + t[1];
    p.z = r[6] * q.x + r[7] * q.y + r[8] * q.z + t[2];
  }
}

}  // namespace rubblevoid::kernels

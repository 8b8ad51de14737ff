#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP implementation used by
// the library and a plain serial reference in `kernels::serial` that the tests
// and the benchmark compare it against. The two must agree exactly.

#include <optional>
#include <span>
#include <vector>

#include "rubblevoid/grid_index.hpp"
#include "rubblevoid/surface.hpp"

namespace rubblevoid::kernels {

/// Nearest indexed point for every query within `max_distance`.
std::vector<std::optional<Neighbor>> nearest_neighbors(const GridIndex& index, std::span<const Point3> queries,
                                                       double max_distance);

/// Per-cell max (or min) z over points whose XY falls in the grid; points
/// outside the grid are ignored.
HeightField rasterize(std::span<const Point3> points, const GridSpec& grid, SurfaceRule rule);

/// earlier - later where both layers are occupied, NaN elsewhere.
std::vector<double> gap_map(const HeightField& earlier, const HeightField& later);

/// Applies R·p + t to every point.
void transform_points(std::span<Point3> points, const double rotation_row_major[9], const double translation[3]);

namespace serial {

/// Brute-force linear scan over every indexed point.
std::vector<std::optional<Neighbor>> nearest_neighbors(const GridIndex& index, std::span<const Point3> queries,
                                                       double max_distance);
HeightField rasterize(std::span<const Point3> points, const GridSpec& grid, SurfaceRule rule);
std::vector<double> gap_map(const HeightField& earlier, const HeightField& later);
void transform_points(std::span<Point3> points, const double rotation_row_major[9], const double translation[3]);

}  // namespace serial

}  // namespace rubblevoid::kernels

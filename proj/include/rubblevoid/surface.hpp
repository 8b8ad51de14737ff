#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rubblevoid/cloud_io.hpp"

namespace rubblevoid {

/// Raster frame shared by every layer. Cell (i, j) covers
/// [origin_x + i*cell_size, origin_x + (i+1)*cell_size) along X and likewise
/// along Y; storage is row-major with i fastest.
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 0.25;
  std::int64_t nx = 1;
  std::int64_t ny = 1;

  std::size_t cell_count() const { return static_cast<std::size_t>(nx * ny); }
  std::size_t linear(std::int64_t i, std::int64_t j) const { return static_cast<std::size_t>(j * nx + i); }
  double center_x(std::int64_t i) const { return origin_x + (static_cast<double>(i) + 0.5) * cell_size; }
  double center_y(std::int64_t j) const { return origin_y + (static_cast<double>(j) + 0.5) * cell_size; }
  double max_x() const { return origin_x + static_cast<double>(nx) * cell_size; }
  double max_y() const { return origin_y + static_cast<double>(ny) * cell_size; }
  double cell_area() const { return cell_size * cell_size; }
  bool contains(std::int64_t i, std::int64_t j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }

  /// Linear index of the cell holding (x, y), or nullopt outside the grid.
  std::optional<std::size_t> locate(double x, double y) const {
    const double fi = std::floor((x - origin_x) / cell_size);
    const double fj = std::floor((y - origin_y) / cell_size);
    if (!(fi >= 0.0 && fj >= 0.0 && fi < static_cast<double>(nx) && fj < static_cast<double>(ny))) return std::nullopt;
    return linear(static_cast<std::int64_t>(fi), static_cast<std::int64_t>(fj));
  }

  /// Throws NonPositiveCell / InvalidArgument when the invariants fail.
  void validate() const;

  /// Smallest grid anchored at region.min covering the region's XY extent.
  static GridSpec covering(const Aabb& region, double cell_size);

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class SurfaceRule { MaxZ, MinZ };

std::string_view to_string(SurfaceRule r);

struct HeightField {
  GridSpec grid;
  std::vector<double> elevation;
  std::vector<std::uint8_t> occupied;
  /// Cells that were filled by interpolation rather than observed.
  std::vector<std::uint8_t> interpolated;
  Epoch epoch{};
  SurfaceRule rule = SurfaceRule::MaxZ;

  static HeightField empty(const GridSpec& grid, Epoch epoch, SurfaceRule rule = SurfaceRule::MaxZ);

  bool is_occupied(std::size_t k) const { return occupied[k] != 0; }
  std::size_t occupied_count() const;
};

HeightField rasterize_dsm(const PointCloud& cloud, const GridSpec& grid, SurfaceRule rule);

/// Fills unoccupied cells whose nearest observed cell lies within
/// `max_hole_radius` cells (Euclidean, cell units) with the inverse-square
/// distance weighted mean of the observed cells in that radius. Only observed
/// cells feed the interpolation, so a second pass changes nothing.
HeightField fill_holes(const HeightField& hf, int max_hole_radius);

struct EpochStack {
  std::vector<HeightField> layers;
  double ground_elevation = 0.0;

  const GridSpec& grid() const { return layers.front().grid; }
  std::size_t size() const { return layers.size(); }
};

EpochStack build_stack(std::vector<HeightField> layers, double ground_elevation);

struct DepthMap {
  GridSpec grid;
  std::vector<double> depth;
  std::vector<std::uint8_t> occupied;
  double max_depth = 0.0;
};

/// First-layer elevation above the ground datum, clamped at zero.
DepthMap pile_depth(const EpochStack& stack);

/// 5th percentile of the layer's occupied elevations outside `footprint`
/// (all occupied cells when none lie outside). Throws AllUnoccupied.
double ground_datum(const HeightField& layer, const std::optional<Aabb>& footprint);

/// 8-bit binary PGM, elevation linearly scaled to 1..255 over the occupied
/// range, 0 for unoccupied cells. Row 0 of the image is the northmost row.
std::string heightfield_to_pgm(const HeightField& hf);

/// Lossless JSON dump: grid header plus row-major elevations (null where unoccupied).
std::string heightfield_to_json(const HeightField& hf);
HeightField heightfield_from_json(std::string_view text);

}  // namespace rubblevoid

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rubblevoid/surface.hpp"

namespace rubblevoid {

/// X_NORMAL bands are thin in X and run along Y, so their profile is a YZ
/// cross-section; Y_NORMAL bands give XZ cross-sections.
enum class SliceAxis { XNormal, YNormal };

std::string_view to_string(SliceAxis a);
SliceAxis slice_axis_from_string(std::string_view s);

struct SlicePlane {
  SliceAxis axis = SliceAxis::XNormal;
  double offset = 0.0;     // band centre along the normal axis
  double thickness = 1.0;  // band width along the normal axis
  double extent_lo = 0.0;  // along the in-plane horizontal axis
  double extent_hi = 0.0;

  double band_lo() const { return offset - 0.5 * thickness; }
  double band_hi() const { return offset + 0.5 * thickness; }
  void validate() const;

  friend bool operator==(const SlicePlane&, const SlicePlane&) = default;
};

/// Bands centred at origin + spacing*(k + 0.5), max(1, ceil(extent/spacing))
/// per axis; a region narrower than one spacing gets a single centred band.
/// X_NORMAL planes come first. Throws InvalidSpacing.
std::vector<SlicePlane> generate_slice_planes(const Aabb& region, double spacing, double thickness);

/// Number of planes per axis for an extent: max(1, ceil(extent / spacing)).
std::int64_t planes_per_axis(double extent, double spacing);

struct SliceProfile {
  SlicePlane plane;
  std::vector<double> stations;
  double station_spacing = 0.0;
  std::vector<Epoch> epochs;
  std::vector<std::vector<double>> elevation;       // [layer][station]
  std::vector<std::vector<std::uint8_t>> occupied;  // [layer][station]

  std::size_t layer_count() const { return elevation.size(); }
};

/// Each station is one raster row/column along the band; its value per layer
/// is the median of the occupied cells whose centres fall inside the band.
/// Throws PlaneOutsideGrid when the band misses the stack grid.
SliceProfile extract_profile(const EpochStack& stack, const SlicePlane& plane);

std::string slice_plane_json(const SlicePlane& plane, double station_spacing, const std::vector<Epoch>& epochs);
std::string slice_profile_json(const SliceProfile& p);

// ---------------------------------------------------------------- rendering

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB, row 0 at the top

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  std::string to_ppm() const;
};

/// Rectangle in profile coordinates (station metres, elevation metres)
/// outlined on top of the layers, used to mark voids.
struct ProfileHighlight {
  double station_lo = 0.0;
  double station_hi = 0.0;
  double z_lo = 0.0;
  double z_hi = 0.0;
};

struct RenderOptions {
  int width = 960;
  int margin = 32;
  int max_height = 2048;
  double vertical_exaggeration = 1.0;
  std::vector<ProfileHighlight> highlights;
};

/// Fixed per-epoch colour order used by both renderers.
Rgb epoch_color(std::size_t layer);

RgbImage render_profile(const SliceProfile& p, const RenderOptions& opts = {});
std::string render_profile_svg(const SliceProfile& p, const RenderOptions& opts = {});

}  // namespace rubblevoid

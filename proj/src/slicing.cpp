#include "rubblevoid/slicing.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

using nlohmann::json;

std::string_view to_string(SliceAxis a) { return a == SliceAxis::XNormal ? "X_NORMAL" : "Y_NORMAL"; }

SliceAxis slice_axis_from_string(std::string_view s) {
  if (s == "X_NORMAL") return SliceAxis::XNormal;
  if (s == "Y_NORMAL") return SliceAxis::YNormal;
  fail(Errc::InvalidArgument, "unknown slice axis '" + std::string(s) + "'");
}

void SlicePlane::validate() const {
  if (!(thickness > 0.0)) fail(Errc::InvalidSpacing, "slice thickness must be positive");
  if (!(extent_lo < extent_hi)) fail(Errc::InvalidArgument, "slice extent must satisfy lo < hi");
}

std::int64_t planes_per_axis(double extent, double spacing) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent / spacing - 1e-9)));
}

std::vector<SlicePlane> generate_slice_planes(const Aabb& region, double spacing, double thickness) {
  if (!(spacing > 0.0) || !(thickness > 0.0) || spacing < thickness) {
    fail(Errc::InvalidSpacing, "need spacing > 0, thickness > 0 and spacing >= thickness");
  }
  if (!region.valid()) fail(Errc::InvalidArgument, "slice region has min > max");
  std::vector<SlicePlane> planes;
  auto emit = [&](SliceAxis axis, double lo, double extent, double along_lo, double along_hi) {
    if (!(along_hi > along_lo)) along_hi = along_lo + thickness;  // degenerate in-plane extent
    if (extent < spacing) {
      planes.push_back({axis, lo + 0.5 * extent, thickness, along_lo, along_hi});
      return;
    }
    const std::int64_t n = planes_per_axis(extent, spacing);
    for (std::int64_t k = 0; k < n; ++k) {
      planes.push_back({axis, lo + spacing * (static_cast<double>(k) + 0.5), thickness, along_lo, along_hi});
    }
  };
  emit(SliceAxis::XNormal, region.min.x, region.extent_x(), region.min.y, region.max.y);
  emit(SliceAxis::YNormal, region.min.y, region.extent_y(), region.min.x, region.max.x);
  return planes;
}

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

SliceProfile extract_profile(const EpochStack& stack, const SlicePlane& plane) {
  plane.validate();
  if (stack.layers.empty()) fail(Errc::InvalidArgument, "empty stack");
  const GridSpec& g = stack.grid();
  const bool xn = plane.axis == SliceAxis::XNormal;

  // Normal axis: which raster lines fall in the band.
  const std::int64_t n_normal = xn ? g.nx : g.ny;
  const double normal_origin = xn ? g.origin_x : g.origin_y;
  const double normal_max = xn ? g.max_x() : g.max_y();
  if (plane.band_hi() < normal_origin || plane.band_lo() > normal_max) {
    fail(Errc::PlaneOutsideGrid, std::string(to_string(plane.axis)) + " band at " + std::to_string(plane.offset) +
                                     " misses the grid");
  }
  std::vector<std::int64_t> band;
  for (std::int64_t a = 0; a < n_normal; ++a) {
    const double c = normal_origin + (static_cast<double>(a) + 0.5) * g.cell_size;
    if (c >= plane.band_lo() && c <= plane.band_hi()) band.push_back(a);
  }
  if (band.empty()) {
    // Band thinner than a cell: take the raster line under the band centre.
    auto a = static_cast<std::int64_t>(std::floor((plane.offset - normal_origin) / g.cell_size));
    band.push_back(std::clamp<std::int64_t>(a, 0, n_normal - 1));
  }

  // In-plane axis: one station per raster line whose centre lies in the extent.
  const std::int64_t n_along = xn ? g.ny : g.nx;
  const double along_origin = xn ? g.origin_y : g.origin_x;
  std::vector<std::int64_t> along;
  SliceProfile p;
  p.plane = plane;
  p.station_spacing = g.cell_size;
  for (std::int64_t b = 0; b < n_along; ++b) {
    const double c = along_origin + (static_cast<double>(b) + 0.5) * g.cell_size;
    if (c >= plane.extent_lo && c <= plane.extent_hi) {
      along.push_back(b);
      p.stations.push_back(c);
    }
  }
  if (along.empty()) fail(Errc::PlaneOutsideGrid, "slice extent misses the grid");

  std::vector<double> scratch;
  for (const auto& layer : stack.layers) {
    p.epochs.push_back(layer.epoch);
    std::vector<double> elev(along.size(), 0.0);
    std::vector<std::uint8_t> occ(along.size(), 0);
    for (std::size_t s = 0; s < along.size(); ++s) {
      scratch.clear();
      for (std::int64_t a : band) {
        const std::size_t k = xn ? g.linear(a, along[s]) : g.linear(along[s], a);
        if (layer.occupied[k]) scratch.push_back(layer.elevation[k]);
      }
      if (scratch.empty()) continue;
      elev[s] = median_of(scratch);
      occ[s] = 1;
    }
    p.elevation.push_back(std::move(elev));
    p.occupied.push_back(std::move(occ));
  }
  return p;
}

std::string slice_plane_json(const SlicePlane& plane, double station_spacing, const std::vector<Epoch>& epochs) {
  json j;
  j["axis"] = std::string(to_string(plane.axis));
  j["offset"] = plane.offset;
  j["thickness"] = plane.thickness;
  j["extent"] = {plane.extent_lo, plane.extent_hi};
  j["station_spacing"] = station_spacing;
  json ep = json::array();
  for (auto e : epochs) ep.push_back(format_epoch(e));
  j["epochs"] = std::move(ep);
  return j.dump();
}

std::string slice_profile_json(const SliceProfile& p) {
  json j = json::parse(slice_plane_json(p.plane, p.station_spacing, p.epochs));
  j["stations"] = p.stations;
  json layers = json::array();
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    json values = json::array();
    for (std::size_t s = 0; s < p.stations.size(); ++s) {
      values.push_back(p.occupied[l][s] ? json(p.elevation[l][s]) : json(nullptr));
    }
    layers.push_back({{"epoch", format_epoch(p.epochs[l])}, {"elevation", std::move(values)}});
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

}  // namespace rubblevoid

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rubblevoid/surface.hpp"

namespace rubblevoid {

enum class Cause { Natural, Excavation, Indeterminate };
enum class CauseSource { Heuristic, Human };

std::string_view to_string(Cause c);
std::string_view to_string(CauseSource s);
Cause cause_from_string(std::string_view s);
CauseSource cause_source_from_string(std::string_view s);
/// Wording used in the void table ("Naturally Formed", "Excavation", "Indeterminate").
std::string_view table_label(Cause c);

/// A 4-connected patch of cells where the earlier layer sits at least
/// `min_gap` above the later one. Per-cell arrays are parallel to `footprint`.
struct VoidCandidate {
  int id = 0;
  GridSpec grid;
  std::vector<std::size_t> footprint;  // sorted linear cell indices
  std::size_t earlier_layer = 0;       // stack index; the later layer is earlier_layer + 1
  std::pair<Epoch, Epoch> epoch_pair;
  std::vector<double> gap_heights;
  std::vector<double> top;     // earlier-layer elevation
  std::vector<double> bottom;  // later-layer elevation
  Point3 centroid;
  /// Some footprint cell borders the edge of the pile in the later layer
  /// (grid edge, unobserved cell, or ground-level cell).
  bool touches_pile_boundary = false;

  double footprint_area() const { return static_cast<double>(footprint.size()) * grid.cell_area(); }
  /// XY bounds of the footprint cells, z from lowest floor to highest ceiling.
  Aabb bounds() const;
};

struct DetectParams {
  double min_gap = 0.15;
  std::size_t min_footprint_cells = 16;
};

/// Candidates from every consecutive layer pair, numbered from 1 in pair
/// order then raster-scan order. Throws SingleLayerStack.
std::vector<VoidCandidate> detect_gaps(const EpochStack& stack, const DetectParams& params);

struct VoidMetrics {
  double approx_volume = 0.0;
  double max_height = 0.0;
  double min_height = 0.0;
  double xz_width = 0.0;
  double yz_width = 0.0;
  bool surface_access = false;
  Cause cause = Cause::Indeterminate;
  CauseSource cause_source = CauseSource::Heuristic;
};

/// Volume integrates gap height over the footprint; minimum height is taken
/// over the footprint after eroding one boundary ring (all cells when the
/// erosion leaves nothing). Widths are axis-aligned footprint extents.
VoidMetrics characterize(const VoidCandidate& v, const GridSpec& grid);

/// Per-cell volume contributions in footprint order; their sum is the
/// characterized volume.
std::vector<double> volume_contributions(const VoidCandidate& v, const GridSpec& grid);

/// Gap volume minus the slab removed over the footprint.
double net_volume(const VoidMetrics& m, double footprint_area, double removed_slab_thickness);

/// NATURAL when the gap volume exceeds the removed-slab volume by more than
/// `margin`, EXCAVATION otherwise, INDETERMINATE without a thickness.
/// Throws NegativeThickness.
Cause classify_cause(double approx_volume, double footprint_area, std::optional<double> removed_slab_thickness,
                     double margin);
Cause classify_cause(const VoidMetrics& m, const VoidCandidate& v, std::optional<double> removed_slab_thickness,
                     double margin);

struct Connectivity {
  std::vector<int> component;  // per void, 0-based, numbered by first appearance
  int component_count = 0;
};

/// Voids join when their footprints come within `adjacency_distance` in XY
/// and their [floor, ceiling] elevation intervals overlap.
Connectivity connectivity(const std::vector<VoidCandidate>& voids, double adjacency_distance);

/// Smallest XY distance between the cell squares of two footprints.
double footprint_distance(const VoidCandidate& a, const VoidCandidate& b);

struct SummaryStats {
  std::size_t count = 0;
  std::optional<double> mean_max_height;
  std::optional<double> mean_min_height;
  std::optional<double> mean_cross_width;
  double max_pile_depth = 0.0;
  int connectivity_components = 0;
  bool any_surface_access = false;
};

/// Cross width averages both widths of every void (2N values).
SummaryStats summarize(const std::vector<VoidMetrics>& metrics, double max_pile_depth,
                       int connectivity_components = 0);

struct VoidTableRow {
  std::string void_id;
  VoidMetrics metrics;
};

inline constexpr std::string_view kVoidTableHeader =
    "void_id,approx_volume_m3,max_height_m,min_height_m,xz_width_m,yz_width_m,cause";

/// Header line plus one row per void, numbers with two decimals.
std::string void_table_csv(const std::vector<VoidTableRow>& rows);

}  // namespace rubblevoid

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rubblevoid/cloud_io.hpp"
#include "rubblevoid/registration.hpp"
#include "rubblevoid/report.hpp"
#include "rubblevoid/surface.hpp"
#include "rubblevoid/voids.hpp"

namespace rubblevoid {

struct InputSpec {
  std::string path;  // resolved against the config directory
  std::optional<Epoch> epoch;
  std::string label;
  std::optional<CloudFormat> format;
  std::string tie_points;  // empty when none
};

struct SlabRegion {
  Aabb region;  // XY only
  double thickness = 0.0;
};

struct PipelineConfig {
  std::vector<InputSpec> inputs;

  bool registration_enabled = true;
  IcpParams icp{100, 1e-4, 2.0, {}, 50000};
  /// Second ICP pass from the first pass's pose with this tighter cutoff, so
  /// surfaces that changed between flights stop pulling on the fit. 0 skips it.
  double refine_pair_distance = 0.3;

  double cell_size = 0.25;
  std::optional<std::array<double, 2>> grid_origin;
  std::optional<std::array<std::int64_t, 2>> grid_size;
  int fill_radius = 2;

  std::optional<Aabb> footprint;
  std::optional<double> ground_elevation;

  double slice_spacing = 4.0;
  double slice_thickness = 1.0;
  bool render_svg = false;
  int image_width = 960;
  double vertical_exaggeration = 1.0;

  DetectParams detect;
  double adjacency_distance = 0.5;
  bool embed_gap_maps = false;

  double margin = 0.25;
  std::optional<double> default_slab_thickness;
  std::vector<SlabRegion> slab_regions;

  std::string output_dir;
  bool export_layers = true;

  /// The config document as read; its canonical dump is what gets hashed.
  nlohmann::json document = nlohmann::json::object();

  /// Slab thickness for a void centred at (x, y): first matching region, then the default.
  std::optional<double> slab_thickness_at(double x, double y) const;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Throws InvalidConfig on unknown types or out-of-range values.
PipelineConfig parse_config(std::string_view text, const std::string& base_dir);
PipelineConfig load_config(const std::string& path);

/// Checks the invariants that need the filesystem (inputs and tie-point
/// files exist). Throws InvalidConfig.
void validate_config(const PipelineConfig& config);

/// FNV-1a 64 of the canonical config dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& document);

struct RunOptions {
  bool write_outputs = true;
  std::function<void(const std::string&)> log;
};

struct RunResult {
  ReportBundle report;
  EpochStack stack;
  std::vector<VoidCandidate> candidates;
};

/// Loads the inputs and runs `analyze`. Outputs go to a staging directory
/// that replaces `output_dir` only on success.
RunResult run(const PipelineConfig& config, const RunOptions& options = {});

/// The whole pipeline on clouds already in memory (one per config input, in
/// the same order). Writes outputs when `options.write_outputs` is set.
RunResult analyze(const PipelineConfig& config, std::vector<PointCloud> clouds, const RunOptions& options = {});

struct AlignResult {
  std::vector<AlignmentRecord> records;
  std::vector<PointCloud> registered;  // ordered by epoch
};

/// Registration only: every epoch onto the earliest one.
AlignResult align_epochs(const PipelineConfig& config, std::vector<PointCloud> clouds);

}  // namespace rubblevoid

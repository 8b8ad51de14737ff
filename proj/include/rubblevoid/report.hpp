#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rubblevoid/registration.hpp"
#include "rubblevoid/slicing.hpp"
#include "rubblevoid/voids.hpp"

namespace rubblevoid {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

struct RunMetadata {
  std::string tool_version{kToolVersion};
  std::string config_hash;
  std::string started_at;
  std::string finished_at;
};

struct AlignmentRecord {
  std::string source;
  Epoch epoch{};
  bool reference = false;
  bool used_tie_points = false;
  RigidTransform transform;
  double mean_nn_distance = 0.0;
  double rms_nn_distance = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct GapCell {
  std::int64_t i = 0;
  std::int64_t j = 0;
  double gap = 0.0;
};

struct VoidRecord {
  int id = 0;
  std::string name;  // optional display name; the table uses it in place of the id
  Epoch earlier{};
  Epoch later{};
  Point3 centroid;
  Aabb bounds;
  std::size_t footprint_cells = 0;
  double footprint_area = 0.0;
  VoidMetrics metrics;
  std::optional<double> removed_slab_thickness;
  std::optional<double> net_volume;
  int component = 0;
  std::vector<int> slices;
  std::vector<GapCell> gap_map;  // empty unless embedding was requested
};

struct SliceRecord {
  int id = 0;
  std::string kind = "grid";  // "grid" or "void"
  SlicePlane plane;
  double station_spacing = 0.0;
  std::vector<Epoch> epochs;
  std::string image;    // path relative to the report directory
  std::string svg;      // empty when not rendered
  std::string profile;  // path relative to the report directory
};

struct AuditEntry {
  std::uint64_t seq = 0;
  int void_id = 0;
  std::string at;
  std::string who;
  Cause previous_cause = Cause::Indeterminate;
  CauseSource previous_source = CauseSource::Heuristic;
  Cause cause = Cause::Indeterminate;
  std::optional<double> removed_slab_thickness;
  std::string note;
};

struct ReportBundle {
  int schema_version = kReportSchemaVersion;
  RunMetadata run;
  nlohmann::json config = nlohmann::json::object();
  GridSpec grid;
  double ground_elevation = 0.0;
  std::vector<Epoch> epochs;
  std::vector<AlignmentRecord> alignments;
  SummaryStats summary;
  std::vector<VoidRecord> voids;
  std::vector<SliceRecord> slices;
  std::vector<AuditEntry> audit_log;

  const VoidRecord* find_void(int id) const;
  const SliceRecord* find_slice(int id) const;
};

nlohmann::json to_json(const VoidRecord& v);
nlohmann::json to_json(const SliceRecord& s);
nlohmann::json to_json(const AuditEntry& a);
nlohmann::json to_json(const ReportBundle& r);
ReportBundle report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON with a trailing newline; stable byte-for-byte across
/// serialize -> parse -> serialize.
std::string serialize_report(const ReportBundle& r);
ReportBundle parse_report(std::string_view text);

ReportBundle load_report(const std::string& path);
/// Writes through a temporary file and rename.
void save_report(const std::string& path, const ReportBundle& r);

/// Copy of the report JSON with run timestamps removed.
nlohmann::json report_payload(const ReportBundle& r);

/// Void table rows in report order.
std::string export_table(const ReportBundle& r);

/// Plan-view overlay: grid extent and each void's XY bounding box.
nlohmann::json overlay_json(const ReportBundle& r);

struct LabelRequest {
  Cause cause = Cause::Indeterminate;
  std::optional<double> removed_slab_thickness;
  std::string note;
};

/// Parses `{cause, removed_slab_thickness?, note?}`; throws InvalidArgument or
/// NegativeThickness on a malformed body.
LabelRequest parse_label_request(std::string_view body);

/// Records a human label and appends to the audit log. Returns false when
/// the void id is not in the report.
bool apply_label(ReportBundle& r, int void_id, const LabelRequest& label, const std::string& who,
                 const std::string& at);

/// Causes obtained by replaying `log` on top of `original`, in void order.
std::vector<std::pair<Cause, CauseSource>> replay_labels(const ReportBundle& original,
                                                         const std::vector<AuditEntry>& log);

}  // namespace rubblevoid

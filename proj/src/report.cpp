#include "rubblevoid/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }
Point3 point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json box_json(const Aabb& b) { return {{"min", point_json(b.min)}, {"max", point_json(b.max)}}; }
Aabb box_from(const json& j) { return {point_from(j.at("min")), point_from(j.at("max"))}; }

json grid_json(const GridSpec& g) {
  return {{"origin", {g.origin_x, g.origin_y}}, {"cell_size", g.cell_size}, {"nx", g.nx}, {"ny", g.ny}};
}

GridSpec grid_from(const json& j) {
  GridSpec g;
  g.origin_x = j.at("origin").at(0).get<double>();
  g.origin_y = j.at("origin").at(1).get<double>();
  g.cell_size = j.at("cell_size").get<double>();
  g.nx = j.at("nx").get<std::int64_t>();
  g.ny = j.at("ny").get<std::int64_t>();
  return g;
}

json epochs_json(const std::vector<Epoch>& es) {
  json a = json::array();
  for (auto e : es) a.push_back(format_epoch(e));
  return a;
}

std::vector<Epoch> epochs_from(const json& j) {
  std::vector<Epoch> out;
  for (const auto& e : j) out.push_back(parse_epoch(e.get<std::string>()));
  return out;
}

json alignment_json(const AlignmentRecord& a) {
  const auto rm = a.transform.to_row_major();
  return {{"source", a.source},
          {"epoch", format_epoch(a.epoch)},
          {"reference", a.reference},
          {"used_tie_points", a.used_tie_points},
          {"transform", std::vector<double>(rm.begin(), rm.end())},
          {"mean_nn_distance", a.mean_nn_distance},
          {"rms_nn_distance", a.rms_nn_distance},
          {"iterations", a.iterations},
          {"converged", a.converged}};
}

AlignmentRecord alignment_from(const json& j) {
  AlignmentRecord a;
  a.source = j.at("source").get<std::string>();
  a.epoch = parse_epoch(j.at("epoch").get<std::string>());
  a.reference = j.at("reference").get<bool>();
  a.used_tie_points = j.value("used_tie_points", false);
  const auto v = j.at("transform").get<std::vector<double>>();
  if (v.size() != 12) fail(Errc::InvalidArgument, "transform needs 12 numbers");
  std::array<double, 12> rm{};
  std::copy(v.begin(), v.end(), rm.begin());
  a.transform = RigidTransform::from_row_major(rm);
  a.mean_nn_distance = j.at("mean_nn_distance").get<double>();
  a.rms_nn_distance = j.at("rms_nn_distance").get<double>();
  a.iterations = j.at("iterations").get<int>();
  a.converged = j.at("converged").get<bool>();
  return a;
}

json summary_json(const SummaryStats& s) {
  return {{"count", s.count},
          {"mean_max_height", opt(s.mean_max_height)},
          {"mean_min_height", opt(s.mean_min_height)},
          {"mean_cross_width", opt(s.mean_cross_width)},
          {"means_defined", s.count > 0},
          {"max_pile_depth", s.max_pile_depth},
          {"connectivity_components", s.connectivity_components},
          {"any_surface_access", s.any_surface_access}};
}

SummaryStats summary_from(const json& j) {
  SummaryStats s;
  s.count = j.at("count").get<std::size_t>();
  s.mean_max_height = opt_double(j, "mean_max_height");
  s.mean_min_height = opt_double(j, "mean_min_height");
  s.mean_cross_width = opt_double(j, "mean_cross_width");
  s.max_pile_depth = j.at("max_pile_depth").get<double>();
  s.connectivity_components = j.at("connectivity_components").get<int>();
  s.any_surface_access = j.at("any_surface_access").get<bool>();
  return s;
}

VoidRecord void_from(const json& j) {
  VoidRecord v;
  v.id = j.at("id").get<int>();
  v.name = j.value("name", std::string());
  v.earlier = parse_epoch(j.at("epoch_pair").at(0).get<std::string>());
  v.later = parse_epoch(j.at("epoch_pair").at(1).get<std::string>());
  v.centroid = point_from(j.at("centroid"));
  v.bounds = box_from(j.at("bounds"));
  v.footprint_cells = j.at("footprint_cells").get<std::size_t>();
  v.footprint_area = j.at("footprint_area").get<double>();
  auto& m = v.metrics;
  m.approx_volume = j.at("approx_volume").get<double>();
  m.max_height = j.at("max_height").get<double>();
  m.min_height = j.at("min_height").get<double>();
  m.xz_width = j.at("xz_width").get<double>();
  m.yz_width = j.at("yz_width").get<double>();
  m.surface_access = j.at("surface_access").get<bool>();
  m.cause = cause_from_string(j.at("cause").get<std::string>());
  m.cause_source = cause_source_from_string(j.at("cause_source").get<std::string>());
  v.removed_slab_thickness = opt_double(j, "removed_slab_thickness");
  v.net_volume = opt_double(j, "net_volume");
  v.component = j.at("component").get<int>();
  v.slices = j.at("slices").get<std::vector<int>>();
  if (j.contains("gap_map")) {
    for (const auto& c : j.at("gap_map")) {
      v.gap_map.push_back({c.at(0).get<std::int64_t>(), c.at(1).get<std::int64_t>(), c.at(2).get<double>()});
    }
  }
  return v;
}

SliceRecord slice_from(const json& j) {
  SliceRecord s;
  s.id = j.at("id").get<int>();
  s.kind = j.at("kind").get<std::string>();
  s.plane.axis = slice_axis_from_string(j.at("axis").get<std::string>());
  s.plane.offset = j.at("offset").get<double>();
  s.plane.thickness = j.at("thickness").get<double>();
  s.plane.extent_lo = j.at("extent").at(0).get<double>();
  s.plane.extent_hi = j.at("extent").at(1).get<double>();
  s.station_spacing = j.at("station_spacing").get<double>();
  s.epochs = epochs_from(j.at("epochs"));
  s.image = j.at("image").get<std::string>();
  s.svg = j.value("svg", std::string());
  s.profile = j.at("profile").get<std::string>();
  return s;
}

AuditEntry audit_from(const json& j) {
  AuditEntry a;
  a.seq = j.at("seq").get<std::uint64_t>();
  a.void_id = j.at("void_id").get<int>();
  a.at = j.at("at").get<std::string>();
  a.who = j.at("who").get<std::string>();
  a.previous_cause = cause_from_string(j.at("previous_cause").get<std::string>());
  a.previous_source = cause_source_from_string(j.at("previous_source").get<std::string>());
  a.cause = cause_from_string(j.at("cause").get<std::string>());
  a.removed_slab_thickness = opt_double(j, "removed_slab_thickness");
  a.note = j.value("note", std::string());
  return a;
}

}  // namespace

const VoidRecord* ReportBundle::find_void(int id) const {
  for (const auto& v : voids) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

const SliceRecord* ReportBundle::find_slice(int id) const {
  for (const auto& s : slices) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

json to_json(const VoidRecord& v) {
  const auto& m = v.metrics;
  json j = {{"id", v.id},
            {"name", v.name},
            {"epoch_pair", {format_epoch(v.earlier), format_epoch(v.later)}},
            {"centroid", point_json(v.centroid)},
            {"bounds", box_json(v.bounds)},
            {"footprint_cells", v.footprint_cells},
            {"footprint_area", v.footprint_area},
            {"approx_volume", m.approx_volume},
            {"max_height", m.max_height},
            {"min_height", m.min_height},
            {"xz_width", m.xz_width},
            {"yz_width", m.yz_width},
            {"surface_access", m.surface_access},
            {"cause", std::string(to_string(m.cause))},
            {"cause_source", std::string(to_string(m.cause_source))},
            {"removed_slab_thickness", opt(v.removed_slab_thickness)},
            {"net_volume", opt(v.net_volume)},
            {"component", v.component},
            {"slices", v.slices}};
  if (!v.gap_map.empty()) {
    json cells = json::array();
    for (const auto& c : v.gap_map) cells.push_back({c.i, c.j, c.gap});
    j["gap_map"] = std::move(cells);
  }
  return j;
}

json to_json(const SliceRecord& s) {
  json j = {{"id", s.id},
            {"kind", s.kind},
            {"axis", std::string(to_string(s.plane.axis))},
            {"offset", s.plane.offset},
            {"thickness", s.plane.thickness},
            {"extent", {s.plane.extent_lo, s.plane.extent_hi}},
            {"station_spacing", s.station_spacing},
            {"epochs", epochs_json(s.epochs)},
            {"image", s.image},
            {"profile", s.profile}};
  if (!s.svg.empty()) j["svg"] = s.svg;
  return j;
}

json to_json(const AuditEntry& a) {
  return {{"seq", a.seq},
          {"void_id", a.void_id},
          {"at", a.at},
          {"who", a.who},
          {"previous_cause", std::string(to_string(a.previous_cause))},
          {"previous_source", std::string(to_string(a.previous_source))},
          {"cause", std::string(to_string(a.cause))},
          {"removed_slab_thickness", opt(a.removed_slab_thickness)},
          {"note", a.note}};
}

json to_json(const ReportBundle& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["run"] = {{"tool_version", r.run.tool_version},
              {"config_hash", r.run.config_hash},
              {"started_at", r.run.started_at},
              {"finished_at", r.run.finished_at}};
  j["config"] = r.config;
  j["grid"] = grid_json(r.grid);
  j["ground_elevation"] = r.ground_elevation;
  j["epochs"] = epochs_json(r.epochs);
  json al = json::array();
  for (const auto& a : r.alignments) al.push_back(alignment_json(a));
  j["alignments"] = std::move(al);
  j["summary"] = summary_json(r.summary);
  json vs = json::array();
  for (const auto& v : r.voids) vs.push_back(to_json(v));
  j["voids"] = std::move(vs);
  json ss = json::array();
  for (const auto& s : r.slices) ss.push_back(to_json(s));
  j["slices"] = std::move(ss);
  json log = json::array();
  for (const auto& a : r.audit_log) log.push_back(to_json(a));
  j["audit_log"] = std::move(log);
  return j;
}

ReportBundle report_from_json(const json& j) {
  try {
    ReportBundle r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      fail(Errc::InvalidArgument, "unsupported report schema_version " + std::to_string(r.schema_version));
    }
    const auto& run = j.at("run");
    r.run.tool_version = run.at("tool_version").get<std::string>();
    r.run.config_hash = run.at("config_hash").get<std::string>();
    r.run.started_at = run.at("started_at").get<std::string>();
    r.run.finished_at = run.at("finished_at").get<std::string>();
    r.config = j.at("config");
    r.grid = grid_from(j.at("grid"));
    r.ground_elevation = j.at("ground_elevation").get<double>();
    r.epochs = epochs_from(j.at("epochs"));
    for (const auto& a : j.at("alignments")) r.alignments.push_back(alignment_from(a));
    r.summary = summary_from(j.at("summary"));
    for (const auto& v : j.at("voids")) r.voids.push_back(void_from(v));
    for (const auto& s : j.at("slices")) r.slices.push_back(slice_from(s));
    for (const auto& a : j.at("audit_log")) r.audit_log.push_back(audit_from(a));
    return r;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("bad report JSON: ") + e.what());
  }
}

std::string serialize_report(const ReportBundle& r) { return to_json(r).dump(2) + "\n"; }

ReportBundle parse_report(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("report is not JSON: ") + e.what());
  }
  return report_from_json(j);
}

ReportBundle load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open report '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_report(buf.str());
}

void save_report(const std::string& path, const ReportBundle& r) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::Io, "cannot write '" + tmp + "'");
    const std::string text = serialize_report(r);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(Errc::Io, "short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::Io, "cannot replace '" + path + "': " + ec.message());
}

json report_payload(const ReportBundle& r) {
  json j = to_json(r);
  j["run"].erase("started_at");
  j["run"].erase("finished_at");
  return j;
}

std::string export_table(const ReportBundle& r) {
  std::vector<VoidTableRow> rows;
  rows.reserve(r.voids.size());
  for (const auto& v : r.voids) rows.push_back({v.name.empty() ? std::to_string(v.id) : v.name, v.metrics});
  return void_table_csv(rows);
}

json overlay_json(const ReportBundle& r) {
  json voids = json::array();
  for (const auto& v : r.voids) {
    voids.push_back({{"id", v.id},
                     {"name", v.name},
                     {"bbox", {{"min", {v.bounds.min.x, v.bounds.min.y}}, {"max", {v.bounds.max.x, v.bounds.max.y}}}},
                     {"centroid", {v.centroid.x, v.centroid.y}},
                     {"cause", std::string(to_string(v.metrics.cause))},
                     {"cause_source", std::string(to_string(v.metrics.cause_source))}});
  }
  return {{"extent", {{"min", {r.grid.origin_x, r.grid.origin_y}}, {"max", {r.grid.max_x(), r.grid.max_y()}}}},
          {"voids", std::move(voids)}};
}

LabelRequest parse_label_request(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    fail(Errc::InvalidArgument, "label body is not JSON");
  }
  if (!j.is_object() || !j.contains("cause") || !j.at("cause").is_string()) {
    fail(Errc::InvalidArgument, "label needs a string 'cause'");
  }
  LabelRequest req;
  req.cause = cause_from_string(j.at("cause").get<std::string>());
  if (j.contains("removed_slab_thickness") && !j.at("removed_slab_thickness").is_null()) {
    if (!j.at("removed_slab_thickness").is_number()) fail(Errc::InvalidArgument, "thickness must be a number");
    const double t = j.at("removed_slab_thickness").get<double>();
    if (t < 0.0 || !std::isfinite(t)) fail(Errc::NegativeThickness, "removed_slab_thickness must be >= 0");
    req.removed_slab_thickness = t;
  }
  if (j.contains("note") && !j.at("note").is_null()) {
    if (!j.at("note").is_string()) fail(Errc::InvalidArgument, "note must be a string");
    req.note = j.at("note").get<std::string>();
  }
  return req;
}

bool apply_label(ReportBundle& r, int void_id, const LabelRequest& label, const std::string& who,
                 const std::string& at) {
  VoidRecord* target = nullptr;
  for (auto& v : r.voids) {
    if (v.id == void_id) target = &v;
  }
  if (!target) return false;
  AuditEntry entry;
  entry.seq = r.audit_log.empty() ? 1 : r.audit_log.back().seq + 1;
  entry.void_id = void_id;
  entry.at = at;
  entry.who = who;
  entry.previous_cause = target->metrics.cause;
  entry.previous_source = target->metrics.cause_source;
  entry.cause = label.cause;
  entry.removed_slab_thickness = label.removed_slab_thickness;
  entry.note = label.note;
  target->metrics.cause = label.cause;
  target->metrics.cause_source = CauseSource::Human;
  if (label.removed_slab_thickness) {
    target->removed_slab_thickness = label.removed_slab_thickness;
    target->net_volume = net_volume(target->metrics, target->footprint_area, *label.removed_slab_thickness);
  }
  r.audit_log.push_back(std::move(entry));
  return true;
}

std::vector<std::pair<Cause, CauseSource>> replay_labels(const ReportBundle& original,
                                                         const std::vector<AuditEntry>& log) {
  std::vector<std::pair<Cause, CauseSource>> state;
  for (const auto& v : original.voids) state.emplace_back(v.metrics.cause, v.metrics.cause_source);
  for (const auto& e : log) {
    for (std::size_t k = 0; k < original.voids.size(); ++k) {
      if (original.voids[k].id == e.void_id) state[k] = {e.cause, CauseSource::Human};
    }
  }
  return state;
}

}  // namespace rubblevoid

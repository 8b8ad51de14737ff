#include "rubblevoid/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rubblevoid/error.hpp"
#include "rubblevoid/slicing.hpp"

namespace rubblevoid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), context + ": " + e.what(), e.record());
  }
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  fail(Errc::InvalidConfig, "config '" + key + "': " + why);
}

template <class T>
T field(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + key, "wrong type");
  }
}

double positive(const json& obj, const char* key, const std::string& where, double fallback) {
  const double v = field<double>(obj, key, where, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) bad(where + key, "must be a positive number");
  return v;
}

std::array<double, 2> pair2(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) bad(key, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

Aabb region_xy(const json& v, const std::string& key) {
  if (!v.is_object() || !v.contains("min") || !v.contains("max")) bad(key, "expected {min: [x, y], max: [x, y]}");
  const auto lo = pair2(v.at("min"), key + ".min");
  const auto hi = pair2(v.at("max"), key + ".max");
  if (!(lo[0] < hi[0] && lo[1] < hi[1])) bad(key, "min must be below max");
  return {{lo[0], lo[1], -1e300}, {hi[0], hi[1], 1e300}};
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
  return (fs::path(base) / path).lexically_normal().string();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "short write to '" + path.string() + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void log(const RunOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

GridSpec choose_grid(const PipelineConfig& c, const std::vector<PointCloud>& clouds) {
  if (c.grid_origin && c.grid_size) {
    GridSpec g{(*c.grid_origin)[0], (*c.grid_origin)[1], c.cell_size, (*c.grid_size)[0], (*c.grid_size)[1]};
    g.validate();
    return g;
  }
  Aabb box;
  if (c.footprint) {
    box = *c.footprint;
  } else {
    box = bounding_box(clouds.front());
    for (std::size_t k = 1; k < clouds.size(); ++k) {
      const Aabb b = bounding_box(clouds[k]);
      box.min.x = std::max(box.min.x, b.min.x);
      box.min.y = std::max(box.min.y, b.min.y);
      box.max.x = std::min(box.max.x, b.max.x);
      box.max.y = std::min(box.max.y, b.max.y);
    }
    if (!(box.min.x < box.max.x && box.min.y < box.max.y)) fail(Errc::NoOverlap, "epoch extents do not overlap in XY");
  }
  box.min.z = box.max.z = 0.0;
  if (c.grid_origin) {
    box.min.x = (*c.grid_origin)[0];
    box.min.y = (*c.grid_origin)[1];
  }
  return GridSpec::covering(box, c.cell_size);
}

bool band_hits(const SlicePlane& p, const Aabb& b) {
  const double lo = p.axis == SliceAxis::XNormal ? b.min.x : b.min.y;
  const double hi = p.axis == SliceAxis::XNormal ? b.max.x : b.max.y;
  return lo <= p.band_hi() && hi >= p.band_lo();
}

ProfileHighlight highlight_for(const SlicePlane& p, const Aabb& b) {
  if (p.axis == SliceAxis::XNormal) return {b.min.y, b.max.y, b.min.z, b.max.z};
  return {b.min.x, b.max.x, b.min.z, b.max.z};
}

struct RenderedSlice {
  SliceRecord record;
  std::string ppm;
  std::string svg;
  std::string profile_json;
};

std::string slice_stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slices/slice_%04d", id);
  return buf;
}

}  // namespace

std::optional<double> PipelineConfig::slab_thickness_at(double x, double y) const {
  for (const auto& r : slab_regions) {
    if (r.region.contains_xy(x, y)) return r.thickness;
  }
  return default_slab_thickness;
}

PipelineConfig parse_config(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(Errc::InvalidConfig, "config must be a JSON object");

  PipelineConfig c;
  c.document = doc;

  if (!doc.contains("inputs") || !doc.at("inputs").is_array() || doc.at("inputs").empty()) {
    bad("inputs", "at least one input cloud is required");
  }
  for (std::size_t k = 0; k < doc.at("inputs").size(); ++k) {
    const json& in = doc.at("inputs")[k];
    const std::string where = "inputs[" + std::to_string(k) + "].";
    if (!in.is_object()) bad(where, "expected an object");
    InputSpec s;
    s.path = resolve(base_dir, field<std::string>(in, "path", where, ""));
    if (s.path.empty()) bad(where + "path", "required");
    const auto epoch = field<std::string>(in, "epoch", where, "");
    if (!epoch.empty()) {
      try {
        s.epoch = parse_epoch(epoch);
      } catch (const Error& e) {
        bad(where + "epoch", e.what());
      }
    }
    s.label = field<std::string>(in, "label", where, fs::path(s.path).stem().string());
    const auto format = field<std::string>(in, "format", where, "");
    if (!format.empty()) {
      try {
        s.format = cloud_format_from_string(format);
      } catch (const Error& e) {
        bad(where + "format", e.what());
      }
    }
    s.tie_points = resolve(base_dir, field<std::string>(in, "tie_points", where, ""));
    c.inputs.push_back(std::move(s));
  }

  const json empty = json::object();
  const json& reg = doc.value("registration", empty);
  c.registration_enabled = field<bool>(reg, "enabled", "registration.", true);
  c.icp.max_iterations = field<int>(reg, "max_iterations", "registration.", c.icp.max_iterations);
  if (c.icp.max_iterations < 1) bad("registration.max_iterations", "must be >= 1");
  c.icp.convergence_eps = positive(reg, "convergence_eps", "registration.", c.icp.convergence_eps);
  c.icp.max_pair_distance = positive(reg, "max_pair_distance", "registration.", c.icp.max_pair_distance);
  c.icp.max_source_points = field<std::size_t>(reg, "max_source_points", "registration.", c.icp.max_source_points);
  c.refine_pair_distance = field<double>(reg, "refine_pair_distance", "registration.", c.refine_pair_distance);
  if (c.refine_pair_distance < 0.0) bad("registration.refine_pair_distance", "must be >= 0");

  const json& grid = doc.value("grid", empty);
  c.cell_size = positive(grid, "cell_size", "grid.", c.cell_size);
  if (grid.contains("origin") && !grid.at("origin").is_null()) c.grid_origin = pair2(grid.at("origin"), "grid.origin");
  if (grid.contains("size") && !grid.at("size").is_null()) {
    const auto& sz = grid.at("size");
    if (!sz.is_array() || sz.size() != 2 || !sz[0].is_number_integer() || !sz[1].is_number_integer() ||
        sz[0].get<std::int64_t>() < 1 || sz[1].get<std::int64_t>() < 1) {
      bad("grid.size", "expected [nx, ny] positive integers");
    }
    c.grid_size = std::array<std::int64_t, 2>{sz[0].get<std::int64_t>(), sz[1].get<std::int64_t>()};
    if (!c.grid_origin) bad("grid.size", "requires grid.origin");
  }
  c.fill_radius = field<int>(grid, "fill_radius", "grid.", c.fill_radius);
  if (c.fill_radius < 0) bad("grid.fill_radius", "must be >= 0");

  if (doc.contains("footprint") && !doc.at("footprint").is_null()) c.footprint = region_xy(doc.at("footprint"), "footprint");
  if (doc.contains("ground_elevation") && !doc.at("ground_elevation").is_null()) {
    c.ground_elevation = field<double>(doc, "ground_elevation", "", 0.0);
  }

  const json& sl = doc.value("slicing", empty);
  c.slice_spacing = positive(sl, "spacing", "slicing.", c.slice_spacing);
  c.slice_thickness = positive(sl, "thickness", "slicing.", c.slice_thickness);
  c.render_svg = field<bool>(sl, "svg", "slicing.", c.render_svg);
  c.image_width = field<int>(sl, "width", "slicing.", c.image_width);
  if (c.image_width < 64) bad("slicing.width", "must be >= 64");
  c.vertical_exaggeration = positive(sl, "vertical_exaggeration", "slicing.", c.vertical_exaggeration);

  const json& det = doc.value("detection", empty);
  c.detect.min_gap = positive(det, "min_gap", "detection.", c.detect.min_gap);
  c.detect.min_footprint_cells = field<std::size_t>(det, "min_footprint_cells", "detection.", c.detect.min_footprint_cells);
  if (c.detect.min_footprint_cells < 1) bad("detection.min_footprint_cells", "must be >= 1");
  c.adjacency_distance = field<double>(det, "adjacency_distance", "detection.", c.adjacency_distance);
  if (c.adjacency_distance < 0.0) bad("detection.adjacency_distance", "must be >= 0");
  c.embed_gap_maps = field<bool>(det, "embed_gap_maps", "detection.", c.embed_gap_maps);

  const json& cls = doc.value("classification", empty);
  c.margin = field<double>(cls, "margin", "classification.", c.margin);
  if (c.margin < 0.0) bad("classification.margin", "must be >= 0");
  if (cls.contains("default_slab_thickness") && !cls.at("default_slab_thickness").is_null()) {
    c.default_slab_thickness = field<double>(cls, "default_slab_thickness", "classification.", 0.0);
    if (*c.default_slab_thickness < 0.0) bad("classification.default_slab_thickness", "must be >= 0");
  }
  if (cls.contains("slab_regions")) {
    const auto& regions = cls.at("slab_regions");
    if (!regions.is_array()) bad("classification.slab_regions", "expected an array");
    for (std::size_t k = 0; k < regions.size(); ++k) {
      const std::string where = "classification.slab_regions[" + std::to_string(k) + "].";
      SlabRegion r;
      r.region = region_xy(regions[k].value("region", json()), where + "region");
      r.thickness = field<double>(regions[k], "thickness", where, -1.0);
      if (r.thickness < 0.0) bad(where + "thickness", "required, >= 0");
      c.slab_regions.push_back(r);
    }
  }

  c.output_dir = resolve(base_dir, field<std::string>(doc, "output_dir", "", ""));
  c.export_layers = field<bool>(doc, "export_layers", "", c.export_layers);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    fail(Errc::InvalidConfig, e.what());
  }
  return parse_config(text, fs::path(path).parent_path().string());
}

void validate_config(const PipelineConfig& c) {
  if (c.inputs.empty()) bad("inputs", "at least one input cloud is required");
  for (const auto& in : c.inputs) {
    if (!fs::is_regular_file(in.path)) fail(Errc::InvalidConfig, "input cloud '" + in.path + "' does not exist");
    if (!in.tie_points.empty() && !fs::is_regular_file(in.tie_points)) {
      fail(Errc::InvalidConfig, "tie-point file '" + in.tie_points + "' does not exist");
    }
  }
}

std::string config_hash(const json& document) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : document.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

AlignResult align_epochs(const PipelineConfig& config, std::vector<PointCloud> clouds) {
  if (clouds.size() != config.inputs.size()) fail(Errc::InvalidArgument, "one cloud per config input is required");
  std::vector<std::size_t> order(clouds.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < clouds.size(); ++k) {
    if (config.inputs[k].epoch) clouds[k].epoch = *config.inputs[k].epoch;
    if (clouds[k].source_label.empty()) clouds[k].source_label = config.inputs[k].label;
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return clouds[a].epoch < clouds[b].epoch; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (clouds[order[k]].epoch == clouds[order[k - 1]].epoch) {
      fail(Errc::DuplicateEpoch, "inputs '" + config.inputs[order[k - 1]].label + "' and '" +
                                     config.inputs[order[k]].label + "' share epoch " +
                                     format_epoch(clouds[order[k]].epoch));
    }
  }

  AlignResult out;
  const std::size_t ref = order.front();
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t k = order[pos];
    const InputSpec& in = config.inputs[k];
    AlignmentRecord rec;
    rec.source = in.label;
    rec.epoch = clouds[k].epoch;
    if (k == ref) {
      rec.reference = true;
      rec.converged = true;
      out.records.push_back(rec);
      continue;
    }
    with_context("registration of '" + in.label + "'", [&] {
      RigidTransform initial;
      if (!in.tie_points.empty()) {
        initial = fit_rigid(parse_tie_points(read_text(in.tie_points)));
        rec.used_tie_points = true;
      }
      if (config.registration_enabled) {
        IcpParams p = config.icp;
        p.initial = initial;
        AlignmentReport r = icp_refine(clouds[k], clouds[ref], p);
        int iterations = r.iterations;
        if (config.refine_pair_distance > 0.0 && config.refine_pair_distance < p.max_pair_distance) {
          p.initial = r.transform;
          p.max_pair_distance = config.refine_pair_distance;
          r = icp_refine(clouds[k], clouds[ref], p);
          iterations += r.iterations;
        }
        rec.transform = r.transform;
        rec.mean_nn_distance = r.mean_nn_distance;
        rec.rms_nn_distance = r.rms_nn_distance;
        rec.iterations = iterations;
        rec.converged = r.converged;
      } else {
        rec.transform = initial;
      }
      return 0;
    });
    out.records.push_back(rec);
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t k = order[pos];
    const auto& t = out.records[pos].transform;
    out.registered.push_back(out.records[pos].reference ? std::move(clouds[k]) : apply_transform(clouds[k], t));
  }
  return out;
}

RunResult analyze(const PipelineConfig& config, std::vector<PointCloud> clouds, const RunOptions& options) {
  RunResult result;
  ReportBundle& rep = result.report;
  rep.run.started_at = utc_now_iso();
  rep.config = config.document;
  rep.run.config_hash = config_hash(config.document);

  log(options, "registering " + std::to_string(clouds.size()) + " epochs");
  AlignResult aligned = align_epochs(config, std::move(clouds));
  rep.alignments = aligned.records;
  for (const auto& a : rep.alignments) {
    if (!a.reference) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %s: mean nn %.4f m, %d iterations%s", a.source.c_str(), a.mean_nn_distance,
                    a.iterations, a.converged ? "" : " (not converged)");
      log(options, buf);
    }
  }

  const GridSpec grid = with_context("grid", [&] { return choose_grid(config, aligned.registered); });
  rep.grid = grid;
  log(options, "rasterizing onto " + std::to_string(grid.nx) + " x " + std::to_string(grid.ny) + " cells");
  std::vector<HeightField> layers;
  for (const auto& cloud : aligned.registered) {
    rep.epochs.push_back(cloud.epoch);
    layers.push_back(with_context("rasterize '" + cloud.source_label + "'", [&] {
      return fill_holes(rasterize_dsm(cloud, grid, SurfaceRule::MaxZ), config.fill_radius);
    }));
  }
  aligned.registered.clear();
  aligned.registered.shrink_to_fit();

  const double ground = config.ground_elevation
                            ? *config.ground_elevation
                            : with_context("ground datum", [&] { return ground_datum(layers.front(), config.footprint); });
  rep.ground_elevation = ground;
  result.stack = build_stack(std::move(layers), ground);
  const EpochStack& stack = result.stack;
  const DepthMap depth = pile_depth(stack);

  std::vector<VoidCandidate> cands;
  if (stack.size() >= 2) cands = detect_gaps(stack, config.detect);
  log(options, std::to_string(cands.size()) + " candidate voids");

  std::vector<VoidMetrics> metrics;
  for (const auto& v : cands) {
    VoidMetrics m = characterize(v, grid);
    const auto thickness = config.slab_thickness_at(v.centroid.x, v.centroid.y);
    m.cause = classify_cause(m, v, thickness, config.margin);
    m.cause_source = CauseSource::Heuristic;
    metrics.push_back(m);

    VoidRecord rec;
    rec.id = v.id;
    rec.earlier = v.epoch_pair.first;
    rec.later = v.epoch_pair.second;
    rec.centroid = v.centroid;
    rec.bounds = v.bounds();
    rec.footprint_cells = v.footprint.size();
    rec.footprint_area = v.footprint_area();
    rec.metrics = m;
    rec.removed_slab_thickness = thickness;
    if (thickness) rec.net_volume = net_volume(m, rec.footprint_area, *thickness);
    if (config.embed_gap_maps) {
      for (std::size_t c = 0; c < v.footprint.size(); ++c) {
        const auto cell = static_cast<std::int64_t>(v.footprint[c]);
        rec.gap_map.push_back({cell % grid.nx, cell / grid.nx, v.gap_heights[c]});
      }
    }
    rep.voids.push_back(std::move(rec));
  }
  const Connectivity conn = connectivity(cands, config.adjacency_distance);
  for (std::size_t k = 0; k < rep.voids.size(); ++k) rep.voids[k].component = conn.component[k];
  rep.summary = summarize(metrics, depth.max_depth, conn.component_count);

  // Slices: the systematic grid first, then two centroid sections per void.
  Aabb region{{grid.origin_x, grid.origin_y, 0.0}, {grid.max_x(), grid.max_y(), 0.0}};
  if (config.footprint) {
    region.min.x = std::max(region.min.x, config.footprint->min.x);
    region.min.y = std::max(region.min.y, config.footprint->min.y);
    region.max.x = std::min(region.max.x, config.footprint->max.x);
    region.max.y = std::min(region.max.y, config.footprint->max.y);
  }
  std::vector<SliceRecord> planned;
  for (const auto& p : generate_slice_planes(region, config.slice_spacing, config.slice_thickness)) {
    SliceRecord s;
    s.kind = "grid";
    s.plane = p;
    planned.push_back(s);
  }
  for (const auto& v : rep.voids) {
    for (SliceAxis axis : {SliceAxis::XNormal, SliceAxis::YNormal}) {
      SliceRecord s;
      s.kind = "void";
      s.plane.axis = axis;
      s.plane.thickness = config.slice_thickness;
      if (axis == SliceAxis::XNormal) {
        s.plane.offset = v.centroid.x;
        s.plane.extent_lo = region.min.y;
        s.plane.extent_hi = region.max.y;
      } else {
        s.plane.offset = v.centroid.y;
        s.plane.extent_lo = region.min.x;
        s.plane.extent_hi = region.max.x;
      }
      planned.push_back(s);
    }
  }
  for (std::size_t k = 0; k < planned.size(); ++k) planned[k].id = static_cast<int>(k + 1);

  std::vector<RenderedSlice> rendered(planned.size());
  std::vector<std::string> slice_errors(planned.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < planned.size(); ++k) {
    RenderedSlice& out = rendered[k];
    out.record = planned[k];
    try {
      const SliceProfile prof = extract_profile(stack, out.record.plane);
      out.record.station_spacing = prof.station_spacing;
      out.record.epochs = prof.epochs;
      RenderOptions ro;
      ro.width = config.image_width;
      ro.vertical_exaggeration = config.vertical_exaggeration;
      for (const auto& v : rep.voids) {
        if (band_hits(out.record.plane, v.bounds)) ro.highlights.push_back(highlight_for(out.record.plane, v.bounds));
      }
      const std::string stem = slice_stem(out.record.id);
      out.record.image = stem + ".ppm";
      out.record.profile = stem + ".json";
      out.ppm = render_profile(prof, ro).to_ppm();
      out.profile_json = slice_profile_json(prof);
      if (config.render_svg) {
        out.record.svg = stem + ".svg";
        out.svg = render_profile_svg(prof, ro);
      }
    } catch (const std::exception& e) {
      slice_errors[k] = e.what();
    }
  }
  for (std::size_t k = 0; k < planned.size(); ++k) {
    if (!slice_errors[k].empty()) {
      fail(Errc::InvalidArgument, "slice " + std::to_string(planned[k].id) + ": " + slice_errors[k]);
    }
  }
  for (const auto& r : rendered) rep.slices.push_back(r.record);
  for (auto& v : rep.voids) {
    for (const auto& s : rep.slices) {
      if (band_hits(s.plane, v.bounds)) v.slices.push_back(s.id);
    }
  }
  log(options, std::to_string(rep.slices.size()) + " slices rendered");

  result.candidates = std::move(cands);
  rep.run.finished_at = utc_now_iso();

  if (options.write_outputs) {
    if (config.output_dir.empty()) bad("output_dir", "required to write outputs");
    const fs::path out(config.output_dir);
    const fs::path staging = out.parent_path() / (out.filename().string() + ".staging");
    std::error_code ec;
    fs::remove_all(staging, ec);
    try {
      fs::create_directories(staging / "slices");
      write_file(staging / "voids.csv", export_table(rep));
      for (const auto& r : rendered) {
        write_file(staging / r.record.image, r.ppm);
        write_file(staging / r.record.profile, r.profile_json);
        if (!r.svg.empty()) write_file(staging / r.record.svg, r.svg);
      }
      if (config.export_layers) {
        fs::create_directories(staging / "layers");
        for (std::size_t k = 0; k < stack.size(); ++k) {
          const std::string name = "layers/layer_" + std::to_string(k + 1);
          write_file(staging / (name + ".pgm"), heightfield_to_pgm(stack.layers[k]));
          write_file(staging / (name + ".json"), heightfield_to_json(stack.layers[k]));
        }
      }
      save_report((staging / "report.json").string(), rep);
      fs::remove_all(out);
      fs::rename(staging, out);
    } catch (const fs::filesystem_error& e) {
      fs::remove_all(staging, ec);
      fail(Errc::Io, e.what());
    } catch (...) {
      fs::remove_all(staging, ec);
      throw;
    }
    log(options, "wrote " + out.string());
  }
  return result;
}

RunResult run(const PipelineConfig& config, const RunOptions& options) {
  validate_config(config);
  if (options.write_outputs && config.output_dir.empty()) bad("output_dir", "required");
  std::vector<PointCloud> clouds;
  for (const auto& in : config.inputs) {
    log(options, "loading " + in.path);
    std::vector<std::string> warnings;
    clouds.push_back(with_context("input '" + in.path + "'", [&] { return load_cloud(in.path, in.format, &warnings); }));
    for (const auto& w : warnings) log(options, "  warning: " + w);
  }
  return analyze(config, std::move(clouds), options);
}

}  // namespace rubblevoid

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rubblevoid/error.hpp"
#include "rubblevoid/pipeline.hpp"
#include "rubblevoid/service.hpp"
#include "rubblevoid/synthetic.hpp"

namespace fs = std::filesystem;
using namespace rubblevoid;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bool g_verbose = false;

void note(const std::string& msg) {
  if (g_verbose) std::cerr << msg << "\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

PipelineConfig require_config(const std::string& path) {
  if (path.empty()) fail(Errc::InvalidConfig, "--config is required");
  return load_config(path);
}

std::string report_path(const std::string& p) {
  return fs::is_directory(p) ? (fs::path(p) / "report.json").string() : p;
}

int cmd_run(const std::string& config_path, const std::string& output) {
  PipelineConfig cfg = require_config(config_path);
  if (!output.empty()) cfg.output_dir = output;
  RunOptions opts;
  opts.log = note;
  const RunResult r = run(cfg, opts);
  std::cout << r.report.voids.size() << " voids, " << r.report.slices.size() << " slices -> " << cfg.output_dir
            << "\n";
  return 0;
}

int cmd_export(const std::string& report, const std::string& out) {
  const std::string csv = export_table(load_report(report_path(report)));
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) fail(Errc::Io, "cannot write '" + out + "'");
    f << csv;
  }
  return 0;
}

int cmd_serve(const std::string& dir, const std::string& host, int port) {
  auto svc = std::make_shared<ReportService>(dir);
  HttpServer server(svc, host, port);
  const int bound = server.bind();
  std::cerr << "serving " << dir << " on http://" << host << ":" << bound << "/api/report\n";
  server.listen();
  return 0;
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir, const std::string& format_name) {
  const SceneSpec spec = scene_spec_from_json(slurp(spec_path));
  const CloudFormat format = cloud_format_from_string(format_name);
  note("generating " + std::to_string(spec.epochs.size()) + " epochs");
  const Scene scene = generate_scene(spec);
  fs::create_directories(out_dir);
  const std::string ext = format == CloudFormat::XyzText ? ".xyz" : ".ply";
  nlohmann::json inputs = nlohmann::json::array();
  for (std::size_t k = 0; k < scene.clouds.size(); ++k) {
    const std::string name = "epoch_" + std::to_string(k + 1) + ext;
    save_cloud((fs::path(out_dir) / name).string(), scene.clouds[k], format);
    inputs.push_back({{"path", name}, {"epoch", format_epoch(scene.clouds[k].epoch)}, {"label", "epoch_" + std::to_string(k + 1)}});
    note("  wrote " + name + " (" + std::to_string(scene.clouds[k].size()) + " points)");
  }
  {
    std::ofstream f(fs::path(out_dir) / "ground_truth.json");
    f << ground_truth_to_json(scene.truth);
  }
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& e : spec.excavations) {
    regions.push_back({{"region", {{"min", {e.region.min.x, e.region.min.y}}, {"max", {e.region.max.x, e.region.max.y}}}},
                       {"thickness", e.thickness}});
  }
  for (const auto& v : spec.voids) {
    const Aabb b = v.xy_box();
    regions.push_back({{"region", {{"min", {b.min.x, b.min.y}}, {"max", {b.max.x, b.max.y}}}},
                       {"thickness", v.cover_thickness}});
  }
  const nlohmann::json config = {
      {"inputs", inputs},
      {"footprint",
       {{"min", {spec.footprint.min.x, spec.footprint.min.y}}, {"max", {spec.footprint.max.x, spec.footprint.max.y}}}},
      {"grid", {{"cell_size", 0.25}, {"origin", {spec.footprint.min.x, spec.footprint.min.y}}}},
      {"ground_elevation", spec.base.ground_elevation},
      {"classification", {{"slab_regions", regions}}},
      {"output_dir", "report"}};
  std::ofstream(fs::path(out_dir) / "config.json") << config.dump(2) << "\n";
  std::cout << "scene written to " << out_dir << "\n";
  return 0;
}

int cmd_align(const std::string& config_path, const std::string& out_dir) {
  const PipelineConfig cfg = require_config(config_path);
  validate_config(cfg);
  std::vector<PointCloud> clouds;
  for (const auto& in : cfg.inputs) clouds.push_back(load_cloud(in.path, in.format));
  const AlignResult r = align_epochs(cfg, std::move(clouds));
  ReportBundle tmp;
  tmp.alignments = r.records;
  const auto alignments = to_json(tmp).at("alignments");
  std::cout << alignments.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (std::size_t k = 0; k < r.registered.size(); ++k) {
      save_cloud((fs::path(out_dir) / ("registered_" + r.records[k].source + ".ply")).string(), r.registered[k],
                 CloudFormat::PlyBinaryLe);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Void detection and characterization for multi-epoch rubble point clouds"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "Pipeline config JSON");
  app.add_flag("-v,--verbose", g_verbose, "Progress messages on stderr");

  std::string run_output;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from --config");
  run_cmd->add_option("-o,--output", run_output, "Override the configured output directory");

  std::string export_report, export_out;
  auto* export_cmd = app.add_subcommand("export", "Write the void table CSV of a report");
  export_cmd->add_option("report", export_report, "Report directory or report.json")->required();
  export_cmd->add_option("-o,--output", export_out, "CSV path (stdout by default)");

  std::string serve_dir, serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a report directory over HTTP");
  serve_cmd->add_option("report_dir", serve_dir, "Directory holding report.json")->required();
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port (0 picks a free one)");

  std::string gen_spec, gen_out, gen_format = "ply_binary_le";
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic scene and a matching config");
  gen_cmd->add_option("scene_spec", gen_spec, "Scene spec JSON")->required();
  gen_cmd->add_option("-o,--output", gen_out, "Output directory")->required();
  gen_cmd->add_option("--format", gen_format, "ply_binary_le, ply_ascii or xyz");

  std::string align_out;
  auto* align_cmd = app.add_subcommand("align", "Register the configured epochs and print the alignment reports");
  align_cmd->add_option("-o,--output", align_out, "Also write registered clouds here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, run_output);
    if (*export_cmd) return cmd_export(export_report, export_out);
    if (*serve_cmd) return cmd_serve(serve_dir, serve_host, serve_port);
    if (*gen_cmd) return cmd_gen(gen_spec, gen_out, gen_format);
    if (*align_cmd) return cmd_align(config_path, align_out);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    const bool validation = e.code() == Errc::InvalidConfig || e.code() == Errc::InvalidArgument ||
                            e.code() == Errc::VoidOutsideFootprint || e.code() == Errc::OverlappingVoids;
    return validation ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

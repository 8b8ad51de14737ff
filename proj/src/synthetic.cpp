#include "rubblevoid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

using nlohmann::json;

// ---------------------------------------------------------------- RNG

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng CounterRng::derive(std::uint64_t seed, std::uint64_t stream) {
  return CounterRng{mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))};
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  return mix(key + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t counter) const {
  const double u = 1.0 - uniform(2 * counter);  // (0, 1]
  const double v = uniform(2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

// ---------------------------------------------------------------- geometry

Aabb SceneVoid::xy_box() const {
  return {{center_x - 0.5 * size_x, center_y - 0.5 * size_y, 0.0}, {center_x + 0.5 * size_x, center_y + 0.5 * size_y, 0.0}};
}

double SceneVoid::plan_area() const {
  return shape == VoidShape::Box ? size_x * size_y : std::numbers::pi * 0.25 * size_x * size_y;
}

double SceneVoid::cavity_volume() const {
  // Lens: integral of h(1 - r^2) over the ellipse = pi*a*b*h/2.
  return shape == VoidShape::Box ? size_x * size_y * height
                                 : 0.5 * std::numbers::pi * (0.5 * size_x) * (0.5 * size_y) * height;
}

bool SceneVoid::covers(double x, double y) const {
  const double dx = (x - center_x) / (0.5 * size_x);
  const double dy = (y - center_y) / (0.5 * size_y);
  if (shape == VoidShape::Box) return std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
  return dx * dx + dy * dy <= 1.0;
}

double SceneVoid::cavity_height(double x, double y) const {
  if (!covers(x, y)) return 0.0;
  if (shape == VoidShape::Box) return height;
  const double dx = (x - center_x) / (0.5 * size_x);
  const double dy = (y - center_y) / (0.5 * size_y);
  return height * std::max(0.0, 1.0 - dx * dx - dy * dy);
}

namespace {

bool boxes_overlap(const Aabb& a, const Aabb& b) {
  return a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y;
}

bool xy_inside(const Aabb& inner, const Aabb& outer) {
  return inner.min.x >= outer.min.x && inner.max.x <= outer.max.x && inner.min.y >= outer.min.y &&
         inner.max.y <= outer.max.y;
}

double base_elevation(const BaseSurfaceSpec& base, double x, double y) {
  double z = base.ground_elevation;
  for (const auto& m : base.mounds) {
    const double dx = (x - m.center_x) / m.radius_x;
    const double dy = (y - m.center_y) / m.radius_y;
    z = std::max(z, base.ground_elevation + m.height * std::max(0.0, 1.0 - dx * dx - dy * dy));
  }
  for (const auto& t : base.terraces) {
    if (!t.region.contains_xy(x, y)) continue;
    const double steps = std::floor((x - t.region.min.x) / t.step_width);
    z = std::max(z, t.top - t.step_height * steps);
  }
  return z;
}

json xy_json(double x, double y) { return json::array({x, y}); }

json region_json(const Aabb& r) { return {{"min", xy_json(r.min.x, r.min.y)}, {"max", xy_json(r.max.x, r.max.y)}}; }

Aabb region_from(const json& j) {
  Aabb r;
  r.min.x = j.at("min").at(0).get<double>();
  r.min.y = j.at("min").at(1).get<double>();
  r.max.x = j.at("max").at(0).get<double>();
  r.max.y = j.at("max").at(1).get<double>();
  return r;
}

}  // namespace

void SceneSpec::validate() const {
  if (version != 1) fail(Errc::InvalidConfig, "unsupported scene_spec_version " + std::to_string(version));
  if (!footprint.valid() || !(footprint.extent_x() > 0.0) || !(footprint.extent_y() > 0.0)) {
    fail(Errc::InvalidConfig, "scene footprint must have positive area");
  }
  if (epochs.empty()) fail(Errc::InvalidConfig, "scene needs at least one epoch");
  for (std::size_t k = 1; k < epochs.size(); ++k) {
    if (!(epochs[k - 1] < epochs[k])) fail(Errc::InvalidConfig, "scene epochs must be strictly increasing");
  }
  if (!(noise_sigma >= 0.0) || !(point_density >= 0.0)) {
    fail(Errc::InvalidConfig, "noise_sigma and point_density must be non-negative");
  }
  const int n_epochs = static_cast<int>(epochs.size());
  for (const auto& m : base.mounds) {
    if (!(m.radius_x > 0.0) || !(m.radius_y > 0.0)) fail(Errc::InvalidConfig, "mound radii must be positive");
  }
  for (const auto& t : base.terraces) {
    if (!(t.step_width > 0.0) || !t.region.valid()) fail(Errc::InvalidConfig, "bad terrace");
  }
  std::vector<Aabb> taken;
  for (std::size_t k = 0; k < voids.size(); ++k) {
    const auto& v = voids[k];
    if (!(v.size_x > 0.0) || !(v.size_y > 0.0) || !(v.height > 0.0) || !(v.cover_thickness >= 0.0)) {
      fail(Errc::InvalidConfig, "void " + std::to_string(k) + " needs positive dimensions");
    }
    if (v.exposed_epoch < 2 || v.exposed_epoch > n_epochs) {
      fail(Errc::InvalidConfig, "void " + std::to_string(k) + " exposed_epoch out of range");
    }
    if (!xy_inside(v.xy_box(), footprint)) {
      fail(Errc::VoidOutsideFootprint, "void " + std::to_string(k) + " extends outside the footprint");
    }
    taken.push_back(v.xy_box());
  }
  for (std::size_t k = 0; k < excavations.size(); ++k) {
    const auto& e = excavations[k];
    if (!e.region.valid() || !(e.thickness > 0.0) || e.epoch < 2 || e.epoch > n_epochs) {
      fail(Errc::InvalidConfig, "bad excavation " + std::to_string(k));
    }
    if (!xy_inside(e.region, footprint)) {
      fail(Errc::VoidOutsideFootprint, "excavation " + std::to_string(k) + " extends outside the footprint");
    }
    taken.push_back(e.region);
  }
  for (std::size_t a = 0; a < taken.size(); ++a) {
    for (std::size_t b = a + 1; b < taken.size(); ++b) {
      if (boxes_overlap(taken[a], taken[b])) {
        fail(Errc::OverlappingVoids, "scene regions " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
      }
    }
  }
}

SceneSpec scene_spec_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SceneSpec s;
    s.version = j.at("scene_spec_version").get<int>();
    s.footprint = region_from(j.at("footprint"));
    for (const auto& e : j.at("epochs")) s.epochs.push_back(parse_epoch(e.get<std::string>()));
    if (j.contains("base_surface")) {
      const auto& b = j.at("base_surface");
      s.base.ground_elevation = b.value("ground_elevation", 0.0);
      for (const auto& m : b.value("mounds", json::array())) {
        s.base.mounds.push_back({m.at("center").at(0).get<double>(), m.at("center").at(1).get<double>(),
                                 m.at("radii").at(0).get<double>(), m.at("radii").at(1).get<double>(),
                                 m.at("height").get<double>()});
      }
      for (const auto& t : b.value("terraces", json::array())) {
        s.base.terraces.push_back({region_from(t.at("region")), t.at("top").get<double>(),
                                   t.value("step_height", 0.3), t.value("step_width", 2.0)});
      }
    }
    for (const auto& v : j.value("voids", json::array())) {
      SceneVoid sv;
      const auto shape = v.value("shape", std::string("box"));
      if (shape == "box") {
        sv.shape = VoidShape::Box;
      } else if (shape == "lens") {
        sv.shape = VoidShape::Lens;
      } else {
        fail(Errc::InvalidConfig, "unknown void shape '" + shape + "'");
      }
      sv.center_x = v.at("center").at(0).get<double>();
      sv.center_y = v.at("center").at(1).get<double>();
      sv.size_x = v.at("size").at(0).get<double>();
      sv.size_y = v.at("size").at(1).get<double>();
      sv.height = v.at("height").get<double>();
      sv.cover_thickness = v.value("cover_thickness", 0.3);
      sv.exposed_epoch = v.value("exposed_epoch", 2);
      s.voids.push_back(sv);
    }
    for (const auto& e : j.value("excavations", json::array())) {
      s.excavations.push_back({region_from(e.at("region")), e.at("thickness").get<double>(), e.value("epoch", 2)});
    }
    s.noise_sigma = j.value("noise_sigma", 0.0);
    s.point_density = j.at("point_density").get<double>();
    s.seed = j.value("seed", std::uint64_t{1});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("bad scene spec: ") + e.what());
  }
}

std::string scene_spec_to_json(const SceneSpec& s) {
  json j;
  j["scene_spec_version"] = s.version;
  j["footprint"] = region_json(s.footprint);
  json epochs = json::array();
  for (auto e : s.epochs) epochs.push_back(format_epoch(e));
  j["epochs"] = std::move(epochs);
  json mounds = json::array(), terraces = json::array();
  for (const auto& m : s.base.mounds) {
    mounds.push_back({{"center", xy_json(m.center_x, m.center_y)},
                      {"radii", xy_json(m.radius_x, m.radius_y)},
                      {"height", m.height}});
  }
  for (const auto& t : s.base.terraces) {
    terraces.push_back({{"region", region_json(t.region)},
                        {"top", t.top},
                        {"step_height", t.step_height},
                        {"step_width", t.step_width}});
  }
  j["base_surface"] = {{"ground_elevation", s.base.ground_elevation}, {"mounds", mounds}, {"terraces", terraces}};
  json voids = json::array();
  for (const auto& v : s.voids) {
    voids.push_back({{"shape", v.shape == VoidShape::Box ? "box" : "lens"},
                     {"center", xy_json(v.center_x, v.center_y)},
                     {"size", xy_json(v.size_x, v.size_y)},
                     {"height", v.height},
                     {"cover_thickness", v.cover_thickness},
                     {"exposed_epoch", v.exposed_epoch}});
  }
  j["voids"] = std::move(voids);
  json exc = json::array();
  for (const auto& e : s.excavations) {
    exc.push_back({{"region", region_json(e.region)}, {"thickness", e.thickness}, {"epoch", e.epoch}});
  }
  j["excavations"] = std::move(exc);
  j["noise_sigma"] = s.noise_sigma;
  j["point_density"] = s.point_density;
  j["seed"] = s.seed;
  return j.dump(2);
}

double scene_surface(const SceneSpec& spec, double x, double y, int epoch) {
  double z = base_elevation(spec.base, x, y);
  for (const auto& e : spec.excavations) {
    if (e.epoch <= epoch && e.region.contains_xy(x, y)) z -= e.thickness;
  }
  for (const auto& v : spec.voids) {
    if (v.exposed_epoch <= epoch && v.covers(x, y)) z -= v.cover_thickness + v.cavity_height(x, y);
  }
  return z;
}

std::vector<const TruthRecord*> GroundTruth::natural() const {
  std::vector<const TruthRecord*> out;
  for (const auto& r : records) {
    if (r.cause == Cause::Natural) out.push_back(&r);
  }
  return out;
}

std::vector<const TruthRecord*> GroundTruth::excavations() const {
  std::vector<const TruthRecord*> out;
  for (const auto& r : records) {
    if (r.cause == Cause::Excavation) out.push_back(&r);
  }
  return out;
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  for (std::size_t k = 0; k < spec.voids.size(); ++k) {
    const auto& v = spec.voids[k];
    TruthRecord r;
    r.index = static_cast<int>(k);
    r.cause = Cause::Natural;
    r.earlier_epoch = v.exposed_epoch - 1;
    r.later_epoch = v.exposed_epoch;
    r.center_x = v.center_x;
    r.center_y = v.center_y;
    r.cavity_volume = v.cavity_volume();
    r.gap_volume = r.cavity_volume + v.cover_thickness * v.plan_area();
    r.max_height = v.height;
    r.xz_width = v.size_x;
    r.yz_width = v.size_y;
    r.removed_slab_thickness = v.cover_thickness;
    r.region = v.xy_box();
    scene.truth.records.push_back(r);
  }
  for (std::size_t k = 0; k < spec.excavations.size(); ++k) {
    const auto& e = spec.excavations[k];
    TruthRecord r;
    r.index = static_cast<int>(k);
    r.cause = Cause::Excavation;
    r.earlier_epoch = e.epoch - 1;
    r.later_epoch = e.epoch;
    r.center_x = 0.5 * (e.region.min.x + e.region.max.x);
    r.center_y = 0.5 * (e.region.min.y + e.region.max.y);
    r.gap_volume = e.thickness * e.region.extent_x() * e.region.extent_y();
    r.max_height = e.thickness;
    r.xz_width = e.region.extent_x();
    r.yz_width = e.region.extent_y();
    r.removed_slab_thickness = e.thickness;
    r.region = e.region;
    scene.truth.records.push_back(r);
  }

  const double area = spec.footprint.extent_x() * spec.footprint.extent_y();
  const auto n = static_cast<std::int64_t>(std::llround(spec.point_density * area));
  for (std::size_t e = 0; e < spec.epochs.size(); ++e) {
    const int epoch = static_cast<int>(e) + 1;
    const CounterRng rng = CounterRng::derive(spec.seed, e);
    PointCloud cloud;
    cloud.epoch = spec.epochs[e];
    cloud.source_label = "synthetic-epoch-" + std::to_string(epoch);
    cloud.points.resize(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::uint64_t>(i) * 4;
      const double x = spec.footprint.min.x + rng.uniform(c) * spec.footprint.extent_x();
      const double y = spec.footprint.min.y + rng.uniform(c + 1) * spec.footprint.extent_y();
      double z = scene_surface(spec, x, y, epoch);
      if (spec.noise_sigma > 0.0) z += spec.noise_sigma * rng.normal(static_cast<std::uint64_t>(i) * 2 + 1);
      cloud.points[static_cast<std::size_t>(i)] = {x, y, z};
    }
    scene.clouds.push_back(std::move(cloud));
  }
  return scene;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
  json arr = json::array();
  for (const auto& r : truth.records) {
    arr.push_back({{"index", r.index},
                   {"cause", std::string(to_string(r.cause))},
                   {"epoch_pair", {r.earlier_epoch, r.later_epoch}},
                   {"center", xy_json(r.center_x, r.center_y)},
                   {"cavity_volume", r.cavity_volume},
                   {"gap_volume", r.gap_volume},
                   {"max_height", r.max_height},
                   {"xz_width", r.xz_width},
                   {"yz_width", r.yz_width},
                   {"removed_slab_thickness", r.removed_slab_thickness},
                   {"region", region_json(r.region)}});
  }
  return json{{"records", arr}}.dump(2);
}

PointCloud perturb_epoch(const PointCloud& cloud, const RigidTransform& rigid, double jitter_sigma,
                         std::uint64_t seed) {
  if (!(jitter_sigma >= 0.0)) fail(Errc::InvalidArgument, "jitter sigma must be non-negative");
  PointCloud out = apply_transform(cloud, rigid);
  if (jitter_sigma == 0.0) return out;
  const CounterRng rng = CounterRng::derive(seed, 0x6A17);
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    auto& p = out.points[static_cast<std::size_t>(i)];
    const auto c = static_cast<std::uint64_t>(i) * 3;
    p.x += jitter_sigma * rng.normal(c);
    p.y += jitter_sigma * rng.normal(c + 1);
    p.z += jitter_sigma * rng.normal(c + 2);
  }
  return out;
}

}  // namespace rubblevoid

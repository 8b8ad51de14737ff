#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rubblevoid/registration.hpp"
#include "rubblevoid/voids.hpp"

namespace rubblevoid {

/// Counter-based generator: output(key, counter) is the SplitMix64 finalizer
/// applied to key + (counter + 1) * 0x9E3779B97F4A7C15. Every draw is
/// addressed by an explicit counter, so results do not depend on evaluation
/// order or thread count.
struct CounterRng {
  std::uint64_t key = 0;

  static std::uint64_t mix(std::uint64_t z);
  /// Independent stream key for (seed, stream id).
  static CounterRng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const;
  /// Standard normal via Box-Muller on counters 2c and 2c+1.
  double normal(std::uint64_t counter) const;
};

struct MoundSpec {
  double center_x = 0.0, center_y = 0.0;
  double radius_x = 1.0, radius_y = 1.0;
  double height = 0.0;
};

/// Pancake-collapse terraces: elevation drops by `step_height` every
/// `step_width` metres along +X from `top` at region.min.x.
struct TerraceSpec {
  Aabb region;
  double top = 0.0;
  double step_height = 0.3;
  double step_width = 2.0;
};

struct BaseSurfaceSpec {
  double ground_elevation = 0.0;
  std::vector<MoundSpec> mounds;
  std::vector<TerraceSpec> terraces;
};

enum class VoidShape { Box, Lens };

/// Cavity of `height` under a slab of `cover_thickness`; the slab is removed
/// (exposing the cavity) at 1-based epoch `exposed_epoch`. Lens cavities have
/// height * (1 - (dx/a)^2 - (dy/b)^2) over the ellipse inscribed in the box.
struct SceneVoid {
  VoidShape shape = VoidShape::Box;
  double center_x = 0.0, center_y = 0.0;
  double size_x = 1.0, size_y = 1.0;
  double height = 1.0;
  double cover_thickness = 0.3;
  int exposed_epoch = 2;

  Aabb xy_box() const;
  double plan_area() const;
  double cavity_volume() const;
  bool covers(double x, double y) const;
  double cavity_height(double x, double y) const;
};

/// Slab of `thickness` dug out of `region` at 1-based `epoch`.
struct Excavation {
  Aabb region;
  double thickness = 0.4;
  int epoch = 2;
};

struct SceneSpec {
  int version = 1;
  Aabb footprint;
  std::vector<Epoch> epochs;
  BaseSurfaceSpec base;
  std::vector<SceneVoid> voids;
  std::vector<Excavation> excavations;
  double noise_sigma = 0.0;
  double point_density = 100.0;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig, VoidOutsideFootprint or OverlappingVoids.
  void validate() const;
};

SceneSpec scene_spec_from_json(std::string_view text);
std::string scene_spec_to_json(const SceneSpec& spec);

struct TruthRecord {
  int index = 0;  // position in spec.voids or spec.excavations
  Cause cause = Cause::Natural;
  int earlier_epoch = 1;  // 1-based pair in which the gap shows
  int later_epoch = 2;
  double center_x = 0.0, center_y = 0.0;
  double cavity_volume = 0.0;  // zero for excavations
  double gap_volume = 0.0;     // cavity plus removed slab
  double max_height = 0.0;     // cavity height (slab thickness for excavations)
  double xz_width = 0.0;
  double yz_width = 0.0;
  double removed_slab_thickness = 0.0;
  Aabb region;
};

struct GroundTruth {
  std::vector<TruthRecord> records;  // natural voids first, then excavations

  std::vector<const TruthRecord*> natural() const;
  std::vector<const TruthRecord*> excavations() const;
};

struct Scene {
  std::vector<PointCloud> clouds;
  GroundTruth truth;
};

/// Noiseless surface elevation at 1-based epoch.
double scene_surface(const SceneSpec& spec, double x, double y, int epoch);

Scene generate_scene(const SceneSpec& spec);

std::string ground_truth_to_json(const GroundTruth& truth);

/// Rigid motion followed by independent N(0, sigma) jitter on each coordinate.
PointCloud perturb_epoch(const PointCloud& cloud, const RigidTransform& rigid, double jitter_sigma,
                         std::uint64_t seed);

}  // namespace rubblevoid

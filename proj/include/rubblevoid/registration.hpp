#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "rubblevoid/cloud_io.hpp"

namespace rubblevoid {

/// x' = rotation * x + translation. Construct through `make` (validating) or
/// `identity()`; a default-constructed value is the identity.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform make(const Eigen::Matrix3d& r, const Eigen::Vector3d& t);
  static RigidTransform from_translation(double x, double y, double z);
  /// Rotation of `angle_rad` about `axis` (normalized internally), then translation.
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle_rad, const Eigen::Vector3d& t);

  /// Row-major 3x3 rotation followed by the translation (12 numbers).
  std::array<double, 12> to_row_major() const;
  static RigidTransform from_row_major(const std::array<double, 12>& v);

  Point3 apply(const Point3& p) const;
  /// Throws InvalidRotation unless RᵀR = I and det R = 1 within 1e-9.
  void validate() const;
  double rotation_angle_rad() const;
};

/// this ∘ other: apply `b` first, then `a`.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& t);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

struct Correspondence {
  Point3 source;
  Point3 target;
};
using CorrespondenceSet = std::vector<Correspondence>;

/// Least-squares rigid motion taking sources onto targets (SVD of the
/// cross-covariance with reflection correction). Throws
/// DegenerateCorrespondences for fewer than three pairs or collinear sources.
RigidTransform fit_rigid(const CorrespondenceSet& pairs);

/// Reads tie points as whitespace-separated `sx sy sz tx ty tz` lines, `#` comments allowed.
CorrespondenceSet parse_tie_points(std::string_view text);

struct IcpParams {
  int max_iterations = 100;
  double convergence_eps = 1e-4;
  double max_pair_distance = 2.0;
  RigidTransform initial;
  /// Source points used for matching; larger clouds are subsampled with a
  /// fixed stride. 0 uses every point.
  std::size_t max_source_points = 0;
};

struct AlignmentReport {
  RigidTransform transform;
  double mean_nn_distance = 0.0;
  double rms_nn_distance = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t accepted_pairs = 0;
  /// Truncated squared-distance objective, sum over matched source points of
  /// min(d², cutoff²), evaluated at the pose that starts each iteration and
  /// at the final pose (iterations + 1 entries).
  std::vector<double> objective_history;
};

/// Point-to-point ICP of `source` onto `target`. Throws EmptyCloud,
/// NoOverlap (no pair within the cutoff at the initial pose) or
/// InvalidArgument for non-positive parameters.
AlignmentReport icp_refine(const PointCloud& source, const PointCloud& target, const IcpParams& params);

struct AlignmentError {
  double mean = 0.0;
  double rms = 0.0;
  std::size_t pairs = 0;
};

/// Nearest-neighbour distances from each point of `a` to `b`, restricted to
/// pairs within `max_pair_distance`. Throws NoOverlap when none qualify.
AlignmentError alignment_error(const PointCloud& a, const PointCloud& b, double max_pair_distance);

}  // namespace rubblevoid

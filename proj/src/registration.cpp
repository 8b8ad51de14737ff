#include "rubblevoid/registration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "rubblevoid/error.hpp"
#include "rubblevoid/grid_index.hpp"
#include "rubblevoid/kernels.hpp"

namespace rubblevoid {

namespace {

Eigen::Vector3d vec(const Point3& p) { return {p.x, p.y, p.z}; }

void transform_in_place(std::span<Point3> points, const RigidTransform& t) {
  const auto rm = t.to_row_major();
  kernels::transform_points(points, rm.data(), rm.data() + 9);
}

// Largest displacement of the box corners between two poses.
double pose_change(const RigidTransform& a, const RigidTransform& b, const Aabb& box) {
  double worst = 0.0;
  for (const auto& c : box.corners()) worst = std::max(worst, distance(a.apply(c), b.apply(c)));
  return worst;
}

// Cell size giving roughly eight points per XY bucket, capped by the search radius.
double matching_cell_size(const Aabb& box, std::size_t n, double max_pair_distance) {
  const double ex = std::max(box.extent_x(), 1e-3);
  const double ey = std::max(box.extent_y(), 1e-3);
  const double cs = std::sqrt(8.0 * ex * ey / static_cast<double>(std::max<std::size_t>(n, 1)));
  return std::clamp(cs, 1e-3, std::max(max_pair_distance, 1e-3));
}

}  // namespace

RigidTransform RigidTransform::make(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  RigidTransform out;
  out.rotation = r;
  out.translation = t;
  out.validate();
  return out;
}

RigidTransform RigidTransform::from_translation(double x, double y, double z) {
  RigidTransform out;
  out.translation = {x, y, z};
  return out;
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle_rad,
                                               const Eigen::Vector3d& t) {
  RigidTransform out;
  out.rotation = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
  out.translation = t;
  return out;
}

std::array<double, 12> RigidTransform::to_row_major() const {
  std::array<double, 12> v{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) v[static_cast<std::size_t>(r * 3 + c)] = rotation(r, c);
  }
  for (int k = 0; k < 3; ++k) v[static_cast<std::size_t>(9 + k)] = translation(k);
  return v;
}

RigidTransform RigidTransform::from_row_major(const std::array<double, 12>& v) {
  Eigen::Matrix3d r;
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) r(row, c) = v[static_cast<std::size_t>(row * 3 + c)];
  }
  return make(r, Eigen::Vector3d(v[9], v[10], v[11]));
}

Point3 RigidTransform::apply(const Point3& p) const {
  const Eigen::Vector3d q = rotation * vec(p) + translation;
  return {q.x(), q.y(), q.z()};
}

void RigidTransform::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) fail(Errc::InvalidRotation, "non-finite transform");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (ortho > 1e-9 || std::abs(det - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "rotation not orthonormal (|RtR - I| = " << ortho << ", det = " << det << ")";
    fail(Errc::InvalidRotation, msg.str());
  }
}

double RigidTransform::rotation_angle_rad() const {
  const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidTransform inverse(const RigidTransform& t) {
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  t.validate();
  PointCloud out = cloud;
  transform_in_place(out.points, t);
  return out;
}

RigidTransform fit_rigid(const CorrespondenceSet& pairs) {
  if (pairs.size() < 3) {
    fail(Errc::DegenerateCorrespondences, "need at least 3 pairs, got " + std::to_string(pairs.size()));
  }
  Eigen::Vector3d cs = Eigen::Vector3d::Zero(), ct = Eigen::Vector3d::Zero();
  for (const auto& p : pairs) {
    cs += vec(p.source);
    ct += vec(p.target);
  }
  const double n = static_cast<double>(pairs.size());
  cs /= n;
  ct /= n;

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (const auto& p : pairs) {
    const Eigen::Vector3d s = vec(p.source) - cs;
    const Eigen::Vector3d t = vec(p.target) - ct;
    scatter += s * s.transpose();
    cross += s * t.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
  if (!(lambda(2) > 0.0) || lambda(1) <= 1e-12 * lambda(2)) {
    fail(Errc::DegenerateCorrespondences, "source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  RigidTransform out;
  out.rotation = v * d * u.transpose();
  out.translation = ct - out.rotation * cs;
  return out;
}

CorrespondenceSet parse_tie_points(std::string_view text) {
  CorrespondenceSet pairs;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<double> v;
    double x;
    while (fields >> x) v.push_back(x);
    if (!fields.eof()) fail(Errc::InvalidArgument, "unparseable tie point", line_no);
    if (v.empty()) continue;
    if (v.size() != 6) fail(Errc::InvalidArgument, "tie point line needs 6 numbers", line_no);
    Correspondence c{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    if (!is_finite(c.source) || !is_finite(c.target)) fail(Errc::NonFiniteValue, "non-finite tie point", line_no);
    pairs.push_back(c);
  }
  return pairs;
}

AlignmentReport icp_refine(const PointCloud& source, const PointCloud& target, const IcpParams& params) {
  if (source.empty() || target.empty()) fail(Errc::EmptyCloud, "ICP needs non-empty source and target");
  if (params.max_iterations <= 0 || !(params.convergence_eps > 0.0) || !(params.max_pair_distance > 0.0)) {
    fail(Errc::InvalidArgument, "ICP parameters must be positive");
  }
  params.initial.validate();

  std::vector<Point3> sample;
  const std::size_t stride =
      params.max_source_points == 0
          ? 1
          : std::max<std::size_t>(1, (source.size() + params.max_source_points - 1) / params.max_source_points);
  sample.reserve(source.size() / stride + 1);
  for (std::size_t k = 0; k < source.size(); k += stride) sample.push_back(source.points[k]);

  const Aabb target_box = bounding_box(target);
  const GridIndex index =
      build_index(target, matching_cell_size(target_box, target.size(), params.max_pair_distance));
  const Aabb sample_box = bounding_box(sample);
  const double cutoff_sq = params.max_pair_distance * params.max_pair_distance;

  AlignmentReport report;
  report.transform = params.initial;
  std::vector<Point3> moved(sample.size());

  struct Matching {
    CorrespondenceSet pairs;
    double objective = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  auto match = [&](const RigidTransform& pose) {
    std::copy(sample.begin(), sample.end(), moved.begin());
    transform_in_place(moved, pose);
    const auto nn = kernels::nearest_neighbors(index, moved, params.max_pair_distance);
    Matching m;
    for (std::size_t k = 0; k < nn.size(); ++k) {
      if (!nn[k]) {
        m.objective += cutoff_sq;
        continue;
      }
      const double d = nn[k]->distance;
      m.objective += d * d;
      m.sum += d;
      m.sum_sq += d * d;
      m.pairs.push_back({sample[k], index.points()[nn[k]->id]});
    }
    return m;
  };

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    Matching m = match(report.transform);
    if (iter == 1 && m.pairs.empty()) {
      fail(Errc::NoOverlap, "no source point within " + std::to_string(params.max_pair_distance) +
                                " m of the target at the initial pose");
    }
    report.objective_history.push_back(m.objective);
    RigidTransform next;
    try {
      next = fit_rigid(m.pairs);
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateCorrespondences) throw;
      break;
    }
    const double change = pose_change(report.transform, next, sample_box);
    report.transform = next;
    report.iterations = iter;
    if (change < params.convergence_eps) {
      report.converged = true;
      break;
    }
  }

  Matching final_match = match(report.transform);
  report.objective_history.push_back(final_match.objective);
  report.accepted_pairs = final_match.pairs.size();
  if (!final_match.pairs.empty()) {
    const double n = static_cast<double>(final_match.pairs.size());
    report.mean_nn_distance = final_match.sum / n;
    report.rms_nn_distance = std::sqrt(final_match.sum_sq / n);
  }
  return report;
}

AlignmentError alignment_error(const PointCloud& a, const PointCloud& b, double max_pair_distance) {
  if (a.empty() || b.empty()) fail(Errc::EmptyCloud, "alignment error needs non-empty clouds");
  if (!(max_pair_distance >= 0.0)) fail(Errc::InvalidArgument, "pair cutoff must be non-negative");
  const GridIndex index = build_index(b, matching_cell_size(bounding_box(b), b.size(), std::max(max_pair_distance, 1e-3)));
  const auto nn = kernels::nearest_neighbors(index, a.points, max_pair_distance);
  AlignmentError err;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& m : nn) {
    if (!m) continue;
    ++err.pairs;
    sum += m->distance;
    sum_sq += m->distance * m->distance;
  }
  if (err.pairs == 0) fail(Errc::NoOverlap, "no pairs within " + std::to_string(max_pair_distance) + " m");
  err.mean = sum / static_cast<double>(err.pairs);
  err.rms = std::sqrt(sum_sq / static_cast<double>(err.pairs));
  return err;
}

}  // namespace rubblevoid

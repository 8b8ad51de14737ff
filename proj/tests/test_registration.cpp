#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rubblevoid/error.hpp"
#include "rubblevoid/registration.hpp"
#include "rubblevoid/synthetic.hpp"
#include "test_support.hpp"

using namespace rubblevoid;

namespace {

RigidTransform random_motion(std::uint64_t seed) {
  const auto rng = CounterRng::derive(seed, 21);
  return RigidTransform::from_axis_angle({rng.normal(0), rng.normal(1), rng.normal(2)},
                                         rng.uniform(3) * std::numbers::pi,
                                         {20 * rng.normal(4), 20 * rng.normal(5), 20 * rng.normal(6)});
}

PointCloud cloud_of(std::vector<Point3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

}  // namespace

TEST(ApplyTransform, Examples) {
  const PointCloud c = cloud_of({{0, 0, 0}, {1, 0, 0}});
  EXPECT_EQ(apply_transform(c, RigidTransform::identity()).points, c.points);
  EXPECT_EQ(apply_transform(c, RigidTransform::from_translation(1, 2, 3)).points[0], (Point3{1, 2, 3}));
  const auto rz = RigidTransform::from_axis_angle({0, 0, 1}, std::numbers::pi / 2, {0, 0, 0});
  const Point3 p = apply_transform(c, rz).points[1];
  EXPECT_NEAR(p.x, 0.0, 1e-12);
  EXPECT_NEAR(p.y, 1.0, 1e-12);
  EXPECT_NEAR(p.z, 0.0, 1e-12);
}

TEST(ApplyTransform, RejectsInvalidRotation) {
  RigidTransform bad;
  bad.rotation(0, 0) = 2.0;
  EXPECT_EQ(code_of([&] { apply_transform(cloud_of({{0, 0, 0}}), bad); }), Errc::InvalidRotation);
  RigidTransform mirror;
  mirror.rotation(2, 2) = -1.0;  // orthonormal but det -1
  EXPECT_EQ(code_of([&] { mirror.validate(); }), Errc::InvalidRotation);
  EXPECT_EQ(code_of([] { RigidTransform::from_row_major({1, 0, 0, 0, 1, 0, 0, 0, 1.1, 0, 0, 0}); }),
            Errc::InvalidRotation);
}

TEST(ApplyTransform, PreservesDistancesAndInverts) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const RigidTransform t = random_motion(s);
    const PointCloud c = testsupport::BumpySurface(s, 5.0, 5).sample(50, s);
    const PointCloud moved = apply_transform(c, t);
    const PointCloud back = apply_transform(moved, inverse(t));
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_NEAR(back.points[i].x, c.points[i].x, 1e-9);
      EXPECT_NEAR(back.points[i].y, c.points[i].y, 1e-9);
      EXPECT_NEAR(back.points[i].z, c.points[i].z, 1e-9);
      const std::size_t j = (i + 7) % c.size();
      const double d0 = distance(c.points[i], c.points[j]);
      EXPECT_NEAR(distance(moved.points[i], moved.points[j]), d0, 1e-9 * std::max(1.0, d0));
    }
    const RigidTransform id = compose(t, inverse(t));
    EXPECT_LT((id.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-9);
    EXPECT_LT(id.translation.norm(), 1e-9);
  }
}

TEST(Compose, AppliesRightOperandFirst) {
  const auto a = RigidTransform::from_translation(1, 0, 0);
  const auto b = RigidTransform::from_axis_angle({0, 0, 1}, std::numbers::pi / 2, {0, 0, 0});
  const Point3 p = compose(a, b).apply({1, 0, 0});
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  EXPECT_NEAR(p.y, 1.0, 1e-12);
}

TEST(RowMajor, RoundTripIsExact) {
  const RigidTransform t = random_motion(99);
  const auto back = RigidTransform::from_row_major(t.to_row_major());
  EXPECT_EQ(back.rotation, t.rotation);
  EXPECT_EQ(back.translation, t.translation);
}

TEST(FitRigid, PureTranslation) {
  CorrespondenceSet pairs;
  for (Point3 s : {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{0, 0, 1}}) {
    pairs.push_back({s, {s.x + 0.5, s.y - 0.2, s.z + 0.1}});
  }
  const RigidTransform t = fit_rigid(pairs);
  EXPECT_LT((t.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-9);
  EXPECT_NEAR(t.translation.x(), 0.5, 1e-9);
  EXPECT_NEAR(t.translation.y(), -0.2, 1e-9);
  EXPECT_NEAR(t.translation.z(), 0.1, 1e-9);
}

TEST(FitRigid, RecoversRandomMotions) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const RigidTransform truth = random_motion(1000 + s);
    const auto rng = CounterRng::derive(s, 22);
    CorrespondenceSet pairs;
    for (int i = 0; i < 10; ++i) {
      const Point3 p{10 * rng.normal(3 * i), 10 * rng.normal(3 * i + 1), 10 * rng.normal(3 * i + 2)};
      pairs.push_back({p, truth.apply(p)});
    }
    const RigidTransform fit = fit_rigid(pairs);
    EXPECT_LT((fit.rotation - truth.rotation).norm(), 1e-9);
    EXPECT_LT((fit.translation - truth.translation).norm(), 1e-9);
    for (const auto& c : pairs) EXPECT_LT(distance(fit.apply(c.source), c.target), 1e-9);
  }
}

TEST(FitRigid, Degenerate) {
  CorrespondenceSet two = {{{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {2, 0, 0}}};
  EXPECT_EQ(code_of([&] { fit_rigid(two); }), Errc::DegenerateCorrespondences);
  CorrespondenceSet line = {{{0, 0, 0}, {0, 0, 0}}, {{1, 1, 1}, {1, 1, 1}}, {{2, 2, 2}, {2, 2, 2}}};
  EXPECT_EQ(code_of([&] { fit_rigid(line); }), Errc::DegenerateCorrespondences);
}

TEST(TiePoints, Parse) {
  const auto pairs = parse_tie_points("# sx sy sz tx ty tz\n0 0 0 1 1 1\n\n2 3 4 5 6 7  # trailing\n");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].target, (Point3{5, 6, 7}));
  try {
    parse_tie_points("0 0 0 1 1 1\n1 2 3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.record(), 2u);
  }
}

TEST(Icp, IdenticalCloudsConvergeImmediately) {
  const PointCloud c = testsupport::BumpySurface(1, 5.0, 10).sample(5000, 1);
  const AlignmentReport r = icp_refine(c, c, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_NEAR(r.mean_nn_distance, 0.0, 1e-12);
  EXPECT_LT((r.transform.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(r.transform.translation.norm(), 1e-12);
}

TEST(Icp, RecoversHalfMetreShift) {
  const PointCloud src = testsupport::BumpySurface(2, 8.0, 20).sample(10000, 2);
  const PointCloud dst = apply_transform(src, RigidTransform::from_translation(0.5, 0, 0));
  IcpParams p;
  p.max_pair_distance = 2.0;
  const AlignmentReport r = icp_refine(src, dst, p);
  EXPECT_NEAR(r.transform.translation.x(), 0.5, 1e-3);
  EXPECT_NEAR(r.transform.translation.y(), 0.0, 1e-3);
  EXPECT_NEAR(r.transform.translation.z(), 0.0, 1e-3);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.objective_history.size(), static_cast<std::size_t>(r.iterations) + 1);
}

TEST(Icp, ObjectiveNeverIncreases) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const testsupport::BumpySurface surf(10 + s, 8.0, 25);
    const auto pert = RigidTransform::from_axis_angle({0.2, -0.4, 1.0}, 0.04 + 0.01 * s, {0.6, -0.3, 0.2});
    const PointCloud src = perturb_epoch(surf.sample(8000, 1), pert, 0.01, s);
    const PointCloud dst = surf.sample(8000, 2);
    IcpParams p;
    p.max_iterations = 50;
    const AlignmentReport r = icp_refine(src, dst, p);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] * (1 + 1e-12) + 1e-12) << "iteration " << i;
    }
  }
}

TEST(Icp, DisjointCloudsHaveNoOverlap) {
  const PointCloud a = testsupport::BumpySurface(3, 3.0, 5).sample(500, 1);
  const PointCloud b = apply_transform(a, RigidTransform::from_translation(100, 0, 0));
  IcpParams p;
  p.max_pair_distance = 1.0;
  EXPECT_EQ(code_of([&] { icp_refine(a, b, p); }), Errc::NoOverlap);
  EXPECT_EQ(code_of([&] { icp_refine(PointCloud{}, b, p); }), Errc::EmptyCloud);
  p.max_iterations = 0;
  EXPECT_EQ(code_of([&] { icp_refine(a, a, p); }), Errc::InvalidArgument);
}

TEST(AlignmentError, IdenticalIsExactlyZero) {
  const PointCloud a = testsupport::BumpySurface(4, 3.0, 5).sample(2000, 1);
  const AlignmentError e = alignment_error(a, a, 0.5);
  EXPECT_EQ(e.mean, 0.0);
  EXPECT_EQ(e.rms, 0.0);
  EXPECT_EQ(e.pairs, a.size());
}

TEST(AlignmentError, WallShiftedAlongNormal) {
  PointCloud wall;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 20; ++j) wall.points.push_back({0.0, 0.1 * i, 0.1 * j});
  }
  const PointCloud shifted = apply_transform(wall, RigidTransform::from_translation(0.8, 0, 0));
  const AlignmentError e = alignment_error(wall, shifted, 2.0);
  EXPECT_NEAR(e.mean, 0.8, 1e-9);
  EXPECT_NEAR(e.rms, 0.8, 1e-9);
}

TEST(AlignmentError, SinglePoints) {
  const AlignmentError e = alignment_error(cloud_of({{0, 0, 0}}), cloud_of({{0, 0.3, 0}}), 1.0);
  EXPECT_NEAR(e.mean, 0.3, 1e-15);
  EXPECT_NEAR(e.rms, 0.3, 1e-15);
  EXPECT_EQ(code_of([] { alignment_error(cloud_of({{0, 0, 0}}), cloud_of({{5, 0, 0}}), 1.0); }), Errc::NoOverlap);
}

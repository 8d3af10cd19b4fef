#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace asterhop;
using asterhop::testing::random_direction;

namespace {

const ShapeModel& rock() {
  static const ShapeModel m = shapes::lumpy_ellipsoid(Vec3(60, 45, 35), 3, 0.25, 17).build();
  return m;
}

// Thin square plate, top face at z = 0.
const ShapeModel& plate() {
  static const ShapeModel m = [] {
    auto d = shapes::box(Vec3(400, 400, 2));
    for (auto& v : d.vertices) v.z() -= 1.0;
    return d.build();
  }();
  return m;
}

// Pose above the rock's +x side, looking with a mild tilt.
RigidTransform pose_near_rock(double dx = 0.0) {
  return RigidTransform::from_axis_angle(Vec3(0.2, 1.0, 0.1), 0.3, Vec3(80.0 + dx, 5.0, 10.0));
}

RigidTransform random_small_transform(Rng& rng, double max_angle, double max_shift) {
  return RigidTransform::from_axis_angle(random_direction(rng), rng.uniform(0.0, max_angle),
                                         random_direction(rng) * rng.uniform(0.0, max_shift));
}

std::vector<Vec3> apply(const RigidTransform& T, const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(T.apply(p));
  return out;
}

}  // namespace

TEST(RigidTransform, ComposeInverseQuaternion) {
  Rng rng(1);
  const auto a = random_small_transform(rng, 1.0, 5.0);
  const auto b = random_small_transform(rng, 1.0, 5.0);
  const Vec3 p(1, 2, 3);
  EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
  EXPECT_LT(((a * a.inverse()).apply(p) - p).norm(), 1e-12);
  const auto q = a.quaternion();
  EXPECT_GE(q.w(), 0.0);
  EXPECT_NEAR(q.norm(), 1.0, 1e-15);
  EXPECT_LT((RigidTransform::from_quaternion(q, a.t).R - a.R).norm(), 1e-12);
  EXPECT_LT(a.orthonormality_error(), 1e-12);
}

TEST(Scan, NadirRayOverFlatPlate) {
  ScanConfig cfg;
  Rng rng(0);
  const auto cloud = simulate_scan(plate(), RigidTransform::from_axis_angle(Vec3::UnitZ(), 0.0, Vec3(3, -2, 12)),
                                   cfg, rng);
  ASSERT_FALSE(cloud.points.empty());
  // The first ray of the grid is the nadir.
  EXPECT_LT((cloud.points.front() - Vec3(0, 0, -12)).norm(), 1e-12);
  for (const auto& p : cloud.points) EXPECT_LE(p.norm(), cfg.max_range + 1e-9);
}

TEST(Scan, DeterministicWithoutNoise) {
  ScanConfig cfg;
  cfg.azimuth = 60;
  cfg.elevation = 30;
  Rng a(1);
  Rng b(99);
  const auto c1 = simulate_scan(rock(), pose_near_rock(), cfg, a);
  const auto c2 = simulate_scan(rock(), pose_near_rock(), cfg, b);
  ASSERT_EQ(c1.points.size(), c2.points.size());
  for (std::size_t i = 0; i < c1.points.size(); ++i) EXPECT_EQ(c1.points[i], c2.points[i]);
}

TEST(Scan, HitCountMatchesBruteForce) {
  ScanConfig cfg;
  cfg.azimuth = 40;
  cfg.elevation = 20;
  cfg.max_range = 90.0;
  Rng rng(2);
  const auto pose = pose_near_rock();
  const auto cloud = simulate_scan(rock(), pose, cfg, rng);
  std::size_t hits = 0;
  for (const auto& d : scan_directions(cfg)) {
    const geometry::WatertightRay ray(pose.t, pose.R * d);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t f = 0; f < rock().facet_count(); ++f) {
      const auto c = rock().corners(f);
      if (auto t = ray.intersect(c[0], c[1], c[2])) best = std::min(best, *t);
    }
    if (best <= cfg.max_range) ++hits;
  }
  EXPECT_EQ(cloud.points.size(), hits);
  EXPECT_GT(hits, 30U);
}

TEST(Scan, OriginInsideRejected) {
  Rng rng(0);
  EXPECT_THROW(simulate_scan(rock(), RigidTransform{}, ScanConfig{}, rng), ConfigError);
  ScanConfig bad;
  bad.azimuth = 1;
  EXPECT_THROW(simulate_scan(rock(), pose_near_rock(), bad, rng), ConfigError);
}

TEST(Icp, IdentityCase) {
  ScanConfig cfg;
  cfg.azimuth = 60;
  cfg.elevation = 30;
  Rng rng(3);
  const auto cloud = simulate_scan(rock(), pose_near_rock(), cfg, rng);
  const auto res = icp(cloud, cloud);
  EXPECT_LT((res.transform.R - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(res.transform.t.norm(), 1e-12);
  EXPECT_EQ(res.mean_squared, 0.0);
  EXPECT_TRUE(res.converged);
}

TEST(Icp, ExactRecoveryAndMonotoneError) {
  ScanConfig cfg;
  cfg.azimuth = 90;
  cfg.elevation = 45;
  Rng rng(4);
  const auto cloud = simulate_scan(rock(), pose_near_rock(), cfg, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const auto truth = random_small_transform(rng, 10.0 / kDegPerRad, 1.0);
    const auto M = apply(truth, cloud.points);
    const auto res = icp(cloud.points, M);
    EXPECT_LT(rotation_difference(res.transform, truth), 1e-6);
    EXPECT_LT((res.transform.t - truth.t).norm(), 1e-6);
    for (std::size_t k = 1; k < res.history.size(); ++k) EXPECT_LE(res.history[k], res.history[k - 1]);
    EXPECT_LT(res.transform.orthonormality_error(), 1e-9);
  }
}

TEST(Icp, Equivariance) {
  ScanConfig cfg;
  cfg.azimuth = 60;
  cfg.elevation = 30;
  Rng rng(5);
  const auto cloud = simulate_scan(rock(), pose_near_rock(), cfg, rng);
  const auto truth = random_small_transform(rng, 0.1, 0.5);
  const auto M = apply(truth, cloud.points);
  const auto base = icp(cloud.points, M);
  const auto S = random_small_transform(rng, 2.0, 20.0);
  const auto moved = icp(apply(S, cloud.points), apply(S, M), S * S.inverse());
  const auto expected = S * base.transform * S.inverse();
  EXPECT_LT((moved.transform.R - expected.R).norm(), 1e-9);
  EXPECT_LT((moved.transform.t - expected.t).norm(), 1e-9);
}

TEST(Icp, NoisyOverlappingClouds) {
  ScanConfig cfg;
  cfg.azimuth = 300;
  cfg.elevation = 150;
  cfg.noise = 0.01;
  Rng rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto pose = pose_near_rock(-10.0);
    const auto d = simulate_scan(rock(), pose, cfg, rng);
    const auto m = simulate_scan(rock(), pose, cfg, rng);
    ASSERT_GT(d.points.size(), 5000U);
    const auto truth = random_small_transform(rng, 5.0 / kDegPerRad, 1.0);
    const auto res = icp(d.points, apply(truth, m.points));
    worst = std::max(worst, (res.transform.t - truth.t).norm());
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Icp, DegenerateInputs) {
  const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_THROW(icp(line, line), DegenerateGeometry);
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(icp(two, two), DegenerateGeometry);
}

TEST(ChainPoses, StaticRoverKeepsInitialPose) {
  ScanConfig cfg;
  cfg.azimuth = 60;
  cfg.elevation = 30;
  Rng rng(7);
  const auto pose = pose_near_rock();
  std::vector<PointCloud> scans;
  for (int k = 0; k < 4; ++k) scans.push_back(simulate_scan(rock(), pose, cfg, rng));
  const auto init = RigidTransform::from_axis_angle(Vec3::UnitX(), 0.2, Vec3(1, 2, 3));
  const auto poses = chain_poses(scans, init);
  ASSERT_EQ(poses.size(), 4U);
  for (const auto& p : poses) {
    EXPECT_LT((p.R - init.R).norm(), 1e-12);
    EXPECT_LT((p.t - init.t).norm(), 1e-12);
  }
}

TEST(ChainPoses, DescentOverFlatPlate) {
  // Straight-line motion along the plate normal. (Motion parallel to a
  // featureless plane leaves ray-cast scans unchanged and is unobservable.)
  ScanConfig cfg;
  cfg.azimuth = 90;
  cfg.elevation = 45;
  cfg.max_range = 150.0;
  Rng rng(8);
  std::vector<PointCloud> scans;
  std::vector<RigidTransform> truth;
  for (int k = 0; k < 6; ++k) {
    truth.push_back(RigidTransform::from_axis_angle(Vec3::UnitZ(), 0.0, Vec3(0, 0, 20.0 - 0.5 * k)));
    scans.push_back(simulate_scan(plate(), truth.back(), cfg, rng));
  }
  const auto poses = chain_poses(scans, truth.front());
  for (std::size_t k = 1; k < poses.size(); ++k) {
    const Vec3 est = poses[k].t - poses[k - 1].t;
    const Vec3 act = truth[k].t - truth[k - 1].t;
    EXPECT_LT((est - act).norm(), 1e-4) << k;
  }
}

TEST(ChainPoses, NeedsTwoScans) {
  std::vector<PointCloud> one(1);
  EXPECT_THROW(chain_poses(one, RigidTransform{}), ConfigError);
}

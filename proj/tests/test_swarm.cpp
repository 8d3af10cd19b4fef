#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace asterhop;
using asterhop::testing::ellipsoid_field;

namespace {

// 200 m cube; its top face is the plane z = 100.
const std::shared_ptr<const ShapeModel>& big_cube() {
  static const auto m = std::make_shared<const ShapeModel>(shapes::cube(200.0).build());
  return m;
}

SurfacePoint top(double x, double y) { return big_cube()->project_to_surface(Vec3(x, y, 150.0)); }

}  // namespace

TEST(Forces, PairRepulsion) {
  auto s = make_state({top(1, 0), top(0, 0)}, 100.0);
  SwarmConfig cfg;
  cfg.count = 2;
  cfg.min_degree = 1;  // both rovers already have one link
  const auto f = forces(s, cfg);
  EXPECT_LT((f[0] - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((f[1] - Vec3(-1, 0, 0)).norm(), 1e-15);
}

TEST(Forces, AttractionOnlyBelowMinimumDegree) {
  // Pair 50 m apart, out of range of each other.
  auto s = make_state({top(25, 0), top(-25, 0)}, 10.0);
  SwarmConfig cfg;
  cfg.count = 2;
  cfg.min_degree = 0;
  EXPECT_LT((forces(s, cfg)[0] - Vec3(1.0 / 50.0, 0, 0)).norm(), 1e-15);
  cfg.min_degree = 1;
  EXPECT_LT((forces(s, cfg)[0] - Vec3(1.0 / 50.0 - 50.0, 0, 0)).norm(), 1e-12);
}

TEST(Forces, MatchReferenceExactly) {
  const auto env = Environment::make(ellipsoid_field());
  SwarmConfig cfg;
  cfg.threads = 4;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto s = make_state(random_placement(*env.shape, cfg, rng), cfg.comm_range);
    const auto f = forces(s, cfg);
    const auto ref = forces_reference(s, cfg.min_degree);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i], ref[i]) << seed << " " << i;
  }
}

TEST(Forces, CoincidentRoversRejected) {
  auto s = make_state({top(1, 0), top(1, 0)}, 100.0);
  SwarmConfig cfg;
  cfg.count = 2;
  cfg.min_degree = 1;
  EXPECT_THROW(forces(s, cfg), CoincidentRovers);
  EXPECT_THROW(forces_reference(s, 1), CoincidentRovers);
}

TEST(Step, EquilibriumLeavesPositionsUnchanged) {
  // Unlinked pair 1 m apart with attraction on: repulsion d/|d|^2 cancels -d.
  const auto env = Environment::gravity_free(big_cube());
  SwarmConfig cfg;
  cfg.count = 2;
  cfg.comm_range = 0.5;
  cfg.min_degree = 1;
  cfg.gain = 10.0;
  auto s = make_state({top(0.5, 0), top(-0.5, 0)}, cfg.comm_range);
  const auto next = step(env, s, cfg, StepMode::Kinematic);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(next.forces[i], Vec3::Zero());
    EXPECT_EQ(next.positions[i].position, s.positions[i].position);
  }
}

TEST(Step, DisconnectedPairClosesIn) {
  const auto env = Environment::gravity_free(big_cube());
  SwarmConfig cfg;
  cfg.count = 2;
  cfg.comm_range = 30.0;
  cfg.min_degree = 1;
  cfg.max_hop = 10.0;
  cfg.gain = 0.1;
  auto s = make_state({top(30, 5), top(-30, 5)}, cfg.comm_range);
  const double before = (s.positions[0].position - s.positions[1].position).norm();
  const auto next = step(env, s, cfg, StepMode::Kinematic);
  EXPECT_LT((next.positions[0].position - next.positions[1].position).norm(), before);
}

TEST(Step, RepulsionOnlyPairSpreads) {
  const auto env = Environment::gravity_free(big_cube());
  SwarmConfig cfg;
  cfg.count = 2;
  cfg.min_degree = 0;
  cfg.max_hop = 5.0;
  cfg.gain = 200.0;
  cfg.iterations = 20;
  Rng rng(0);
  const auto run = simulate(env, cfg, StepMode::Kinematic, rng, std::vector<SurfacePoint>{top(1, 2), top(-3, 1)});
  for (std::size_t k = 1; k < run.metrics.size(); ++k) {
    EXPECT_GE(run.metrics[k].min_distance, run.metrics[k - 1].min_distance);
  }
  EXPECT_GT(run.metrics.back().min_distance, run.metrics.front().min_distance);
}

TEST(Step, MovesNeverExceedMaxHopAndLinksStayConsistent) {
  const auto env = Environment::make(ellipsoid_field());
  SwarmConfig cfg;
  cfg.gain = 400.0;  // strong gain so clamping is exercised
  cfg.iterations = 10;
  cfg.coverage_samples = 200;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto run = simulate(env, cfg, StepMode::Kinematic, rng);
    for (const auto& s : run.history) {
      const std::size_t n = s.size();
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LE(s.displacements[i].norm(), cfg.max_hop + 1e-9);
        EXPECT_FALSE(s.linked(i, i));
        int deg = 0;
        for (std::size_t j = 0; j < n; ++j) {
          EXPECT_EQ(s.linked(i, j), s.linked(j, i));
          deg += s.linked(i, j) ? 1 : 0;
        }
        EXPECT_EQ(deg, s.degrees[i]);
      }
    }
  }
}

TEST(Simulate, DeterministicGivenSeed) {
  const auto env = Environment::make(ellipsoid_field());
  SwarmConfig cfg;
  cfg.iterations = 5;
  cfg.coverage_samples = 500;
  Rng a(42);
  Rng b(42);
  auto threaded = cfg;
  threaded.threads = 3;
  const auto r1 = simulate(env, cfg, StepMode::Kinematic, a);
  const auto r2 = simulate(env, threaded, StepMode::Kinematic, b);
  ASSERT_EQ(r1.metrics.size(), r2.metrics.size());
  for (std::size_t k = 0; k < r1.metrics.size(); ++k) {
    EXPECT_EQ(r1.metrics[k].coverage, r2.metrics[k].coverage);
    EXPECT_EQ(r1.metrics[k].mean_distance, r2.metrics[k].mean_distance);
  }
  EXPECT_GT(r1.metrics.front().coverage, 0.0);
  EXPECT_EQ(r1.metrics.front().components, r2.metrics.front().components);
}

TEST(Simulate, BallisticModeNeedsHopTime) {
  const auto env = Environment::make(ellipsoid_field());
  SwarmConfig cfg;
  Rng rng(1);
  EXPECT_THROW(simulate(env, cfg, StepMode::Ballistic, rng), ConfigError);
}

TEST(Simulate, BallisticStepsAreSolvedAsHops) {
  const auto env = Environment::make(ellipsoid_field());
  SwarmConfig cfg;
  cfg.count = 4;
  cfg.min_degree = 1;
  cfg.iterations = 1;
  cfg.hop_time = 600.0;
  cfg.coverage_samples = 100;
  Rng rng(3);
  const auto run = simulate(env, cfg, StepMode::Ballistic, rng);
  EXPECT_EQ(run.history.size(), 2U);
  EXPECT_EQ(run.metrics.back().degraded, 0);
}

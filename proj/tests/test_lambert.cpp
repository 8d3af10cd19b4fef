#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace asterhop;
using asterhop::testing::sphere_field_l3;

namespace {

// Surface point under the direction `d` on the sphere fixture.
SurfacePoint sphere_point(const Vec3& d) {
  return sphere_field_l3()->shape().project_to_surface(200.0 * d.normalized());
}

}  // namespace

TEST(Lambert, CircularQuarterOrbit) {
  const double mu = 3.986004418e14;
  const double R = 7000e3;
  const double period = 2.0 * kPi * std::sqrt(R * R * R / mu);
  const auto g = two_body_guess(mu, Vec3(R, 0, 0), Vec3(0, R, 0), period / 4.0);
  EXPECT_FALSE(g.fallback);
  EXPECT_NEAR(g.v0.norm() / std::sqrt(mu / R), 1.0, 1e-9);
  EXPECT_NEAR(g.v0.x(), 0.0, 1e-9 * g.v0.norm());
}

TEST(Lambert, HyperbolicAndEllipticBranches) {
  // Oracle: propagate the guess under a point mass and land on the target.
  const double mu = 1.0;
  const Vec3 r0(1.0, 0.2, 0.0);
  const Vec3 rf(-0.3, 1.4, 0.3);
  for (double tau : {0.3, 1.0, 3.0, 6.0}) {
    const auto g = two_body_guess(mu, r0, rf, tau);
    ASSERT_FALSE(g.fallback) << tau;
    Vec3 r = r0;
    Vec3 v = g.v0;
    const int n = 200000;
    const double h = tau / n;
    auto acc = [&](const Vec3& x) { return -mu * x / std::pow(x.norm(), 3); };
    for (int i = 0; i < n; ++i) {
      const Vec3 k1v = acc(r), k1r = v;
      const Vec3 k2v = acc(r + 0.5 * h * k1r), k2r = v + 0.5 * h * k1v;
      const Vec3 k3v = acc(r + 0.5 * h * k2r), k3r = v + 0.5 * h * k2v;
      const Vec3 k4v = acc(r + h * k3r), k4r = v + h * k3v;
      r += h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
      v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    EXPECT_LT((r - rf).norm(), 1e-8) << tau;
  }
}

TEST(Lambert, VanishingFieldGivesStraightLine) {
  const Vec3 r0(100, 0, 0);
  const Vec3 rf(0, 100, 10);
  const auto zero = two_body_guess(0.0, r0, rf, 500.0);
  EXPECT_TRUE(zero.fallback);
  EXPECT_EQ(zero.v0, (rf - r0) / 500.0);
  const auto tiny = two_body_guess(1e-12, r0, rf, 500.0);
  EXPECT_LT((tiny.v0 - (rf - r0) / 500.0).norm(), 1e-9);
}

TEST(Lambert, OppositePointsFallBack) {
  const auto g = two_body_guess(1.0, Vec3(1, 0, 0), Vec3(-1, 0, 0), 2.0);
  EXPECT_TRUE(g.fallback);
  EXPECT_EQ(g.v0, Vec3(-1, 0, 0));
}

TEST(Stm, ZeroGravityIsTauIdentity) {
  const auto env = Environment::gravity_free(asterhop::testing::unit_cube());
  const double tau = 300.0;
  const Mat3 phi = stm_columns(env, Vec3(5, 0, 0), Vec3(0.01, 0.02, 0), tau, 1e-6);
  EXPECT_LT((phi - tau * Mat3::Identity()).norm(), 1e-9 * tau);
  const auto sens = propagate_with_sensitivity(env, {Vec3(5, 0, 0), Vec3(0.01, 0.02, 0), 0.0}, tau, 1.0);
  EXPECT_LT((sens.phi - tau * Mat3::Identity()).norm(), 1e-12 * tau);
}

TEST(Stm, WeakUniformFieldIsNearIdentity) {
  auto env = Environment::gravity_free(asterhop::testing::unit_cube());
  env.disturbance = Vec3(0, 0, -1e-7);
  const double tau = 300.0;
  const Mat3 phi = stm_columns(env, Vec3(5, 0, 0), Vec3(0.01, 0.02, 0), tau, 1e-6);
  EXPECT_LT((phi - tau * Mat3::Identity()).norm(), 1e-7 * tau * tau * tau + 1e-9 * tau);
}

TEST(Stm, CentralMatchesForwardDifferences) {
  const auto env = Environment::make(sphere_field_l3());
  const Vec3 r0(101, 20, -5);
  const Vec3 v0(0.03, 0.01, 0.02);
  const Mat3 c = stm_columns(env, r0, v0, 1200.0, 1e-6, 1.0);
  const Mat3 f = stm_forward(env, r0, v0, 1200.0, 1e-6, 1.0);
  EXPECT_LT((c - f).norm() / c.norm(), 1e-4);
}

TEST(Stm, ConditionNumber) {
  EXPECT_NEAR(condition_number(Mat3::Identity() * 4.0), 1.0, 1e-12);
  Mat3 singular = Mat3::Zero();
  singular(0, 0) = 1.0;
  EXPECT_TRUE(std::isinf(condition_number(singular)) || condition_number(singular) > 1e12);
}

TEST(SolveHop, ZeroGravityConvergesInOneIteration) {
  const auto shape = asterhop::testing::unit_cube();
  const auto env = Environment::gravity_free(shape);
  const auto from = shape->project_to_surface(Vec3(0.1, 0.2, 2.0));
  const auto to = shape->project_to_surface(Vec3(2.0, -0.1, 0.3));
  const auto res = solve_hop(env, from, to, 100.0);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_TRUE(res.lambert_fallback);
  EXPECT_LT((res.v0 - (res.target_point - res.launch_point) / 100.0).norm(), 1e-15);
  EXPECT_EQ(res.trajectory.outcome, HopOutcome::Landed);
}

TEST(SolveHop, SphereAgreesWithTwoBodyLambert) {
  const auto env = Environment::make(sphere_field_l3());
  const auto from = sphere_point(Vec3(1, 0.2, 0.1));
  const auto to = sphere_point(Vec3(0.6, 0.7, -0.2));
  for (const auto method : {StmMethod::CentralDifference, StmMethod::Variational}) {
    ShootingConfig cfg;
    cfg.stm = method;
    const auto res = solve_hop(env, from, to, 1800.0, cfg);
    ASSERT_TRUE(res.converged);
    EXPECT_LE(res.final_error, 1e-3);
    EXPECT_LE(res.iterations, 20);
    const auto oracle = two_body_guess(env.mu(), res.launch_point, res.target_point, 1800.0);
    EXPECT_LT((res.v0 - oracle.v0).norm() / oracle.v0.norm(), 0.005);
    EXPECT_FALSE(res.trajectory.subsurface);
    EXPECT_LT(res.trajectory.theta_launch, 90.0);
    // Error history is what the loop saw; the last entry is the accepted iterate.
    EXPECT_EQ(res.error_history.size(), static_cast<std::size_t>(res.iterations));
  }
}

TEST(SolveHop, UnconvergedReturnsBestIterate) {
  const auto env = Environment::make(sphere_field_l3(), Vec3(0, 0, 2e-4));
  const auto from = sphere_point(Vec3(1, 0.2, 0.1));
  const auto to = sphere_point(Vec3(-0.2, 1.0, 0.3));
  ShootingConfig cfg;
  cfg.max_iter = 1;
  cfg.stm = StmMethod::Variational;
  const auto res = solve_hop(env, from, to, 1500.0, cfg);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_EQ(res.trajectory.outcome, HopOutcome::TimedOut);
  EXPECT_GT(res.final_error, 1e-3);
  EXPECT_EQ(res.final_error, res.error_history.front());
}

TEST(SolveHop, RotatingFrameConverges) {
  const auto env = Environment::make(sphere_field_l3(), Vec3(0, 0, 2.0 * kPi / (8.0 * 3600.0)));
  const auto from = sphere_point(Vec3(1, 0.2, 0.1));
  const auto to = sphere_point(Vec3(0.5, 0.8, 0.3));
  const auto res = solve_hop(env, from, to, 1200.0);
  ASSERT_TRUE(res.converged);
  // Re-propagating the answer reaches the target.
  PropagateOptions opts;
  opts.stop_at_impact = false;
  const auto tr = propagate(env, {res.launch_point, res.v0, 0.0}, 1200.0, default_step(1200.0), opts);
  EXPECT_LT((tr.final_state.r - res.target_point).norm(), 1e-3);
  EXPECT_EQ(res.trajectory.samples.size(), tr.samples.size());
}

TEST(SolveHop, InvalidInputs) {
  const auto env = Environment::make(sphere_field_l3());
  const auto p = sphere_point(Vec3(1, 0, 0.1));
  EXPECT_THROW(solve_hop(env, p, p, 100.0), ConfigError);
  EXPECT_THROW(solve_hop(env, p, sphere_point(Vec3(0, 1, 0.1)), -1.0), ConfigError);
  ShootingConfig bad;
  bad.tol = 0.0;
  EXPECT_THROW(solve_hop(env, p, sphere_point(Vec3(0, 1, 0.1)), 100.0, bad), ConfigError);
}

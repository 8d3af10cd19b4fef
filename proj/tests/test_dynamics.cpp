#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace asterhop;
using asterhop::testing::sphere_field_l3;

namespace {

// Energy-like integral in the rotating frame: v^2/2 - U - |w x r|^2/2.
double jacobi(const GravityField& f, const Vec3& omega, const RoverState& s) {
  return 0.5 * s.v.squaredNorm() - f.potential(s.r) - 0.5 * omega.cross(s.r).squaredNorm();
}

}  // namespace

TEST(Dynamics, NonRotatingAccelerationIsGravity) {
  const auto env = Environment::make(sphere_field_l3());
  const RoverState s{Vec3(150, 20, -10), Vec3(0.01, 0.02, 0.0), 0.0};
  EXPECT_EQ(acceleration(env, s), sphere_field_l3()->acceleration(s.r));
}

TEST(Dynamics, CentrifugalTerm) {
  const double Omega = 3e-4;
  const auto env = Environment::gravity_free(asterhop::testing::unit_cube(), Vec3(0, 0, Omega));
  const auto a = acceleration(env, {Vec3(200.0, 0, 0), Vec3::Zero(), 0.0});
  EXPECT_NEAR(a.x(), Omega * Omega * 200.0, 1e-18);
  EXPECT_EQ(a.y(), 0.0);
  EXPECT_EQ(a.z(), 0.0);
}

TEST(Dynamics, CoriolisTerm) {
  const double Omega = 3e-4;
  const double v = 0.2;
  const auto env = Environment::gravity_free(asterhop::testing::unit_cube(), Vec3(0, 0, Omega));
  const auto a = acceleration(env, {Vec3::Zero(), Vec3(v, 0, 0), 0.0});
  // -2 (W z) x (v x) = -2 W v (z x x) = -2 W v y
  EXPECT_NEAR(a.x(), 0.0, 1e-20);
  EXPECT_NEAR(a.y(), -2.0 * Omega * v, 1e-20);
  EXPECT_NEAR(a.z(), 0.0, 1e-20);
  // Against the explicit skew-matrix form.
  const Vec3 w(1e-4, -2e-4, 3e-4);
  const auto env2 = Environment::gravity_free(asterhop::testing::unit_cube(), w);
  const RoverState s{Vec3(3, -4, 5), Vec3(0.1, 0.2, -0.3), 0.0};
  const Vec3 expected = -2.0 * skew(w) * s.v - skew(w) * skew(w) * s.r;
  EXPECT_LT((acceleration(env2, s) - expected).norm(), 1e-18);
}

TEST(Dynamics, FreeMotionLandsWhereTheRayHits) {
  const auto cube = asterhop::testing::unit_cube();
  const auto env = Environment::gravity_free(cube);
  const Vec3 r0(2.0, 0.3, -0.1);
  const Vec3 v0 = Vec3(-1.0, -0.1, 0.05).normalized() * 0.05;
  const auto tr = propagate(env, {r0, v0, 0.0}, 200.0, 0.5);
  ASSERT_EQ(tr.outcome, HopOutcome::Landed);
  const auto hit = cube->ray_intersect(r0, v0.normalized());
  ASSERT_TRUE(hit);
  const Vec3 expected = r0 + hit->distance * v0.normalized();
  EXPECT_LT((tr.final_state.r - expected).norm(), 1e-4);
  EXPECT_NEAR(tr.tau, hit->distance / v0.norm(), 1e-4 / v0.norm());
  EXPECT_LT(cube->distance(tr.final_state.r), 1e-4);
  EXPECT_EQ(tr.landing->facet, hit->facet);
  EXPECT_EQ(tr.samples.front().r, r0);
  EXPECT_EQ(tr.samples.back().r, tr.final_state.r);
}

TEST(Dynamics, RadialLaunchAboveEscapeSpeedEscapes) {
  const auto env = Environment::make(sphere_field_l3());
  const Vec3 dir = Vec3(1.0, 0.13, 0.07).normalized();  // off the mesh vertices
  const Vec3 r0 = 101.0 * dir;
  const double ve = escape_speed(*sphere_field_l3(), r0);
  const auto tr = propagate(env, {r0, 1.2 * ve * dir, 0.0}, 1e6, 5.0);
  EXPECT_EQ(tr.outcome, HopOutcome::Escaped);
  const auto back = propagate(env, {r0, 0.8 * ve * dir, 0.0}, 1e6, 5.0);
  EXPECT_EQ(back.outcome, HopOutcome::Landed);
}

TEST(Dynamics, ConeAngles) {
  const auto& cube = *asterhop::testing::unit_cube();
  const std::uint32_t top = 2;  // +z face
  ASSERT_NEAR(cube.normals()[top].z(), 1.0, 1e-15);
  auto [t1, t2] = cone_angles(cube, top, Vec3(0, 0, 0.3), top, Vec3(0, 0, -0.2));
  EXPECT_NEAR(t1, 0.0, 1e-12);
  EXPECT_NEAR(t2, 0.0, 1e-12);
  std::tie(t1, t2) = cone_angles(cube, top, Vec3(0.3, 0.1, 0), top, Vec3(1, 0, -1));
  EXPECT_NEAR(t1, 90.0, 1e-12);
  EXPECT_NEAR(t2, 45.0, 1e-12);
  EXPECT_THROW(cone_angles(cube, top, Vec3::Zero(), top, Vec3(0, 0, -1)), DegenerateGeometry);
}

TEST(Dynamics, EnergyConservedWithoutRotation) {
  const auto field = sphere_field_l3();
  const auto env = Environment::make(field);
  const RoverState s0{Vec3(180, 0, 0), Vec3(0, 0.05, 0.01), 0.0};
  PropagateOptions opts;
  opts.record_samples = false;
  const auto tr = propagate(env, s0, 1800.0, 0.5, opts);
  ASSERT_EQ(tr.outcome, HopOutcome::TimedOut);
  const Vec3 w = Vec3::Zero();
  EXPECT_LT(std::abs(jacobi(*field, w, tr.final_state) / jacobi(*field, w, s0) - 1.0), 1e-6);
}

TEST(Dynamics, JacobiIntegralConservedWhenRotating) {
  const auto field = sphere_field_l3();
  const Vec3 w(0, 0, 2.0 * kPi / (12.0 * 3600.0));
  const auto env = Environment::make(field, w);
  const RoverState s0{Vec3(150, 30, 20), Vec3(-0.01, 0.055, 0.0), 0.0};
  PropagateOptions opts;
  opts.record_samples = false;
  const auto tr = propagate(env, s0, 1800.0, 0.5, opts);
  ASSERT_EQ(tr.outcome, HopOutcome::TimedOut);
  EXPECT_LT(std::abs(jacobi(*field, w, tr.final_state) / jacobi(*field, w, s0) - 1.0), 1e-6);
}

TEST(Dynamics, LaunchInsideBodyRejected) {
  const auto env = Environment::make(sphere_field_l3());
  try {
    propagate(env, {Vec3(10, 0, 0), Vec3(0.1, 0, 0), 0.0}, 10.0, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "LaunchInsideBody");
    EXPECT_EQ(e.kind(), ErrorKind::Numerical);
  }
}

TEST(Dynamics, SubsurfaceFlagWithoutImpactStop) {
  const auto env = Environment::make(sphere_field_l3());
  PropagateOptions opts;
  opts.stop_at_impact = false;
  const auto tr = propagate(env, {Vec3(3.7, -2.3, 300), Vec3(0, 0, -0.5), 0.0}, 2000.0, 1.0, opts);
  EXPECT_TRUE(tr.subsurface);
  EXPECT_EQ(tr.outcome, HopOutcome::TimedOut);
}

TEST(Dynamics, StepIsRoundedToDivideTheHorizon) {
  const auto env = Environment::gravity_free(asterhop::testing::unit_cube());
  const auto tr = propagate(env, {Vec3(1, 1, 1), Vec3(0.1, 0, 0), 0.0}, 10.0, 3.0);
  ASSERT_EQ(tr.samples.size(), 5U);  // 4 steps of 2.5 s
  EXPECT_DOUBLE_EQ(tr.samples.back().t, 10.0);
  EXPECT_EQ(tr.outcome, HopOutcome::TimedOut);
}

TEST(Dynamics, VariationalSensitivityMatchesDifferences) {
  const auto field = sphere_field_l3();
  const Vec3 w(0, 0, 1e-4);
  const auto env = Environment::make(field, w);
  const Vec3 r0(105, 10, 0);
  const Vec3 v0(0.02, 0.03, 0.01);
  const double tau = 900.0;
  const auto sens = propagate_with_sensitivity(env, {r0, v0, 0.0}, tau, 0.5);
  const Mat3 fd = stm_columns(env, r0, v0, tau, 1e-6, 0.5);
  EXPECT_LT((sens.phi - fd).norm() / fd.norm(), 1e-6);
  PropagateOptions opts;
  opts.stop_at_impact = false;
  opts.record_samples = false;
  const auto plain = propagate(env, {r0, v0, 0.0}, tau, 0.5, opts);
  EXPECT_LT((sens.final_state.r - plain.final_state.r).norm(), 1e-9);
}

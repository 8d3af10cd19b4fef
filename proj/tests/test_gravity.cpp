#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace asterhop;
using asterhop::testing::random_direction;
using asterhop::testing::sphere_field_l3;

namespace {

const GravityField& sphere_l4() {
  static const GravityField f(std::make_shared<const ShapeModel>(shapes::icosphere(100.0, 4).build()), 1900.0);
  return f;
}

std::shared_ptr<const GravityField> lumpy_field() {
  static const auto f = [] {
    const auto d = shapes::lumpy_ellipsoid(Vec3(100, 90, 80), 2, 0.1, 3);
    return std::make_shared<const GravityField>(std::make_shared<const ShapeModel>(d.vertices, d.facets, true),
                                                2000.0);
  }();
  return f;
}

}  // namespace

TEST(Gravity, CubeMass) {
  const GravityField f(asterhop::testing::unit_cube(), 2000.0);
  EXPECT_NEAR(f.mass(), 2000.0, 1e-10);
  EXPECT_NEAR(f.mu(), 2000.0 * GravityField::kDefaultG, 1e-22);
}

TEST(Gravity, FaceDyadsIdempotent) {
  const auto& f = *sphere_field_l3();
  for (std::size_t i = 0; i < f.shape().facet_count(); ++i) {
    const Mat3 F = f.face_dyad(i);
    EXPECT_LT((F * F - F).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gravity, EdgeDyadsSymmetric) {
  for (const auto& e : sphere_field_l3()->edge_dyads()) {
    EXPECT_LT((e.dyad - e.dyad.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gravity, SphereMuMatchesAnalyticWithinVolumeError) {
  const auto& f = sphere_l4();
  const double analytic = GravityField::kDefaultG * 1900.0 * 4.0 / 3.0 * kPi * 1e6;
  const double volume_error = std::abs(f.shape().volume() / (4.0 / 3.0 * kPi * 1e6) - 1.0);
  EXPECT_NEAR(f.mu() / analytic - 1.0, -volume_error, 1e-12);
  EXPECT_LT(volume_error, 0.005);
}

TEST(Gravity, NewtonianAtTenRadii) {
  const auto& f = sphere_l4();
  const Vec3 r(1000.0, 0.0, 0.0);
  const auto s = f.evaluate(r);
  EXPECT_LT(std::abs(s.acceleration.norm() / (f.mu() / 1e6) - 1.0), 0.005);
  EXPECT_LT(std::abs(s.potential / (f.mu() / 1000.0) - 1.0), 0.005);
  EXPECT_LT(s.acceleration.dot(r), 0.0);  // toward the body
}

TEST(Gravity, CubeCenterSymmetry) {
  const GravityField f(asterhop::testing::unit_cube(), 2000.0);
  const auto s = f.evaluate(Vec3::Zero());
  EXPECT_LT(s.acceleration.norm(), 1e-20);
  EXPECT_NEAR(s.laplacian / f.interior_laplacian(), 1.0, 1e-6);
  // Interior gradient trace is the Laplacian.
  EXPECT_NEAR(s.gradient.trace() / f.interior_laplacian(), 1.0, 1e-9);
}

TEST(Gravity, ExteriorLaplacianVanishes) {
  const auto& f = *lumpy_field();
  Rng rng(4);
  const double scale = 4.0 * kPi * f.gravitational_constant() * f.density();
  for (int i = 0; i < 50; ++i) {
    const Vec3 r = random_direction(rng) * rng.uniform(1.05, 5.0) * f.shape().bounding_radius();
    const auto s = f.evaluate(r);
    EXPECT_LT(std::abs(s.laplacian), 1e-6 * scale);
    EXPECT_LT(std::abs(s.gradient.trace()), 1e-6 * scale);
    EXPECT_GT(s.potential, 0.0);
  }
}

TEST(Gravity, InteriorLaplacianMatchesWinding) {
  const auto& f = *lumpy_field();
  Rng rng(8);
  const double R = f.shape().bounding_radius();
  int inside = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 r(rng.uniform(-R, R), rng.uniform(-R, R), rng.uniform(-R, R));
    const auto s = f.evaluate(r);
    const bool in = f.shape().winding_number(r) > 0.5;
    inside += in ? 1 : 0;
    EXPECT_EQ(f.is_interior(s.laplacian), in);
    EXPECT_NEAR(s.laplacian, in ? f.interior_laplacian() : 0.0, 1e-6 * std::abs(f.interior_laplacian()));
  }
  EXPECT_GT(inside, 20);
}

TEST(Gravity, GradientMatchesPotentialDifferences) {
  const auto& f = *lumpy_field();
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const Vec3 r = random_direction(rng) * rng.uniform(1.1, 3.0) * f.shape().bounding_radius();
    const auto s = f.evaluate(r);
    const double h = 1e-3;
    Vec3 fd;
    Mat3 hd;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      fd[k] = (f.potential(r + e) - f.potential(r - e)) / (2.0 * h);
      hd.col(k) = (f.acceleration(r + e) - f.acceleration(r - e)) / (2.0 * h);
    }
    EXPECT_LT((fd - s.acceleration).norm() / s.acceleration.norm(), 1e-6);
    EXPECT_LT((hd - s.gradient).norm() / s.gradient.norm(), 1e-5);
  }
}

TEST(Gravity, FarFieldDecay) {
  const auto& f = *lumpy_field();
  Rng rng(1);
  const double R = f.shape().bounding_radius();
  const std::array<std::pair<double, double>, 3> checks{{{5.0, 0.01}, {10.0, 0.003}, {20.0, 0.001}}};
  for (int i = 0; i < 10; ++i) {
    const Vec3 dir = random_direction(rng);
    for (const auto& [k, tol] : checks) {
      const double g = f.acceleration(k * R * dir).norm();
      EXPECT_LT(std::abs(g * k * k * R * R / f.mu() - 1.0), tol) << "k = " << k;
    }
  }
}

TEST(Gravity, EscapeSpeed) {
  const auto& f = *sphere_field_l3();
  const auto& m = f.shape();
  const Vec3 p = m.centroid(0) + 1e-3 * m.normals()[0];
  const double expected = std::sqrt(2.0 * f.mu() / p.norm());
  EXPECT_LT(std::abs(escape_speed(f, p) / expected - 1.0), 0.01);
  double prev = escape_speed(f, Vec3(150, 0, 0));
  for (double r = 200.0; r < 1e6; r *= 2.0) {
    const double v = escape_speed(f, Vec3(r, 0, 0));
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Gravity, SingularPointsThrow) {
  const auto& f = *sphere_field_l3();
  const auto& m = f.shape();
  EXPECT_THROW(f.evaluate(m.vertices()[5]), SingularEvaluation);
  const auto& e = m.edges()[3];
  EXPECT_THROW(f.evaluate(0.5 * (m.vertices()[e.v[0]] + m.vertices()[e.v[1]])), SingularEvaluation);
  // Facet interiors are regular: the potential is continuous across the surface.
  EXPECT_NO_THROW(f.evaluate(m.centroid(0)));
  try {
    f.evaluate(m.vertices()[5]);
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Numerical);
    EXPECT_EQ(err.code(), "SingularEvaluation");
  }
}

TEST(Gravity, BatchIsThreadCountInvariant) {
  const auto& f = *sphere_field_l3();
  Rng rng(2);
  std::vector<Vec3> pts;
  for (int i = 0; i < 64; ++i) pts.push_back(random_direction(rng) * rng.uniform(120.0, 400.0));
  const auto one = f.evaluate_batch(pts, 1);
  const auto four = f.evaluate_batch(pts, 4);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(one[i].potential, four[i].potential);
    EXPECT_EQ(one[i].acceleration, four[i].acceleration);
    EXPECT_EQ(one[i].gradient, four[i].gradient);
  }
}

TEST(Gravity, CheapPathsAgreeWithFullEvaluation) {
  const auto& f = *sphere_field_l3();
  const Vec3 r(130.0, -40.0, 25.0);
  const auto full = f.evaluate(r);
  double lap = 1.0;
  EXPECT_EQ(f.acceleration(r, &lap), full.acceleration);
  EXPECT_EQ(lap, full.laplacian);
  EXPECT_EQ(f.potential(r), full.potential);
  EXPECT_EQ(f.acceleration_and_gradient(r).gradient, full.gradient);
}

TEST(Gravity, InvalidConstruction) {
  EXPECT_THROW(GravityField(asterhop::testing::unit_cube(), 0.0), ConfigError);
  EXPECT_THROW(GravityField(nullptr, 1.0), ConfigError);
}

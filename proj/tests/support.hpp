#pragma once

#include "asterhop/asterhop.hpp"

#include <memory>

namespace asterhop::testing {

inline constexpr double kRockDensity = 1900.0;

// Shared fixtures are built once per process; every query on them is const.
inline std::shared_ptr<const ShapeModel> sphere_model(double radius, int subdivisions) {
  return std::make_shared<const ShapeModel>(shapes::icosphere(radius, subdivisions).build());
}

inline const std::shared_ptr<const GravityField>& sphere_field_l3() {
  static const auto f = std::make_shared<const GravityField>(sphere_model(100.0, 3), kRockDensity);
  return f;
}

inline const std::shared_ptr<const ShapeModel>& unit_cube() {
  static const auto m = std::make_shared<const ShapeModel>(shapes::cube(1.0).build());
  return m;
}

// 550 x 300 x 250 m ellipsoid (semi-axes 275, 150, 125) used by planner tests.
inline const std::shared_ptr<const GravityField>& ellipsoid_field() {
  static const auto f = std::make_shared<const GravityField>(
      std::make_shared<const ShapeModel>(shapes::ellipsoid(Vec3(275.0, 150.0, 125.0), 2).build()), kRockDensity);
  return f;
}

inline Vec3 random_direction(Rng& rng) {
  return Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
}

}  // namespace asterhop::testing

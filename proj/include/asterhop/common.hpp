#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace asterhop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDegPerRad = 180.0 / kPi;

// Exit-code families used by the command-line front-end.
enum class ErrorKind { Config = 2, Mesh = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, "ConfigError", what) {}
};

class MeshError : public Error {
 public:
  MeshError(std::string code, const std::string& what) : Error(ErrorKind::Mesh, std::move(code), what) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string code, const std::string& what)
      : Error(ErrorKind::Numerical, std::move(code), what) {}
};

class SingularEvaluation : public NumericalError {
 public:
  explicit SingularEvaluation(const std::string& what) : NumericalError("SingularEvaluation", what) {}
};

class SingularStm : public NumericalError {
 public:
  explicit SingularStm(const std::string& what) : NumericalError("SingularSTM", what) {}
};

class DegenerateGeometry : public NumericalError {
 public:
  explicit DegenerateGeometry(const std::string& what) : NumericalError("DegenerateGeometry", what) {}
};

class GoalUnreached : public NumericalError {
 public:
  explicit GoalUnreached(const std::string& what) : NumericalError("GoalUnreached", what) {}
};

class CoincidentRovers : public NumericalError {
 public:
  explicit CoincidentRovers(const std::string& what) : NumericalError("CoincidentRovers", what) {}
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

// Skew-symmetric cross-product matrix: skew(a) * b == a.cross(b).
inline Mat3 skew(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

}  // namespace asterhop

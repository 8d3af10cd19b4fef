#pragma once

#include "asterhop/common.hpp"
#include "asterhop/dynamics.hpp"
#include "asterhop/mesh.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

namespace asterhop {

struct LambertGuess {
  Vec3 v0 = Vec3::Zero();
  bool fallback = false;  // straight-line guess used
};

namespace detail {

// Stumpff functions C(z), S(z) with series expansions near zero.
inline double stumpff_c(double z) {
  if (z > 1e-6) return (1.0 - std::cos(std::sqrt(z))) / z;
  if (z < -1e-6) return (std::cosh(std::sqrt(-z)) - 1.0) / (-z);
  return 0.5 - z / 24.0 + z * z / 720.0;
}

inline double stumpff_s(double z) {
  if (z > 1e-6) {
    const double s = std::sqrt(z);
    return (s - std::sin(s)) / (s * s * s);
  }
  if (z < -1e-6) {
    const double s = std::sqrt(-z);
    return (std::sinh(s) - s) / (s * s * s);
  }
  return 1.0 / 6.0 - z / 120.0 + z * z / 5040.0;
}

}  // namespace detail

// Zero-revolution, short-way Lambert solution for a point mass `mu` at the
// origin (universal variables, bisection on z). Falls back to the straight-line
// velocity (rf - r0) / tau for a ~180 degree transfer or a vanishing field.
inline LambertGuess two_body_guess(double mu, const Vec3& r0, const Vec3& rf, double tau) {
  if (!(tau > 0.0)) throw ConfigError("transfer time must be positive");
  const LambertGuess straight{(rf - r0) / tau, true};
  if (!(mu > 0.0)) return straight;
  const double r1 = r0.norm();
  const double r2 = rf.norm();
  if (!(r1 > 0.0) || !(r2 > 0.0)) return straight;
  // Gravity-induced drift over tau is far below the chord: the universal
  // variable solve would only add cancellation error.
  const double chord = (rf - r0).norm();
  if (mu * tau * tau < 1e-9 * chord * std::min(r1, r2) * std::min(r1, r2)) return straight;
  const double cos_dnu = std::clamp(r0.dot(rf) / (r1 * r2), -1.0, 1.0);
  if (1.0 + cos_dnu < 1e-10) return straight;
  const double A = std::sqrt(r1 * r2 * (1.0 + cos_dnu));
  const double sqrt_mu = std::sqrt(mu);

  auto y_of = [&](double z) {
    return r1 + r2 + A * (z * detail::stumpff_s(z) - 1.0) / std::sqrt(detail::stumpff_c(z));
  };
  // Time-of-flight residual; negative wherever y < 0 (no real transfer).
  auto residual = [&](double z) {
    const double y = y_of(z);
    if (y < 0.0) return -sqrt_mu * tau;
    const double c = detail::stumpff_c(z);
    const double x = std::sqrt(y / c);
    return x * x * x * detail::stumpff_s(z) + A * std::sqrt(y) - sqrt_mu * tau;
  };

  constexpr double kZMax = 4.0 * kPi * kPi;
  double hi = kZMax * (1.0 - 1e-9);
  double lo = -4.0 * kPi * kPi;
  while (residual(lo) > 0.0) {
    lo *= 4.0;
    // Transfer faster than any reasonable hyperbola: the field is negligible.
    if (lo < -1e5) return straight;
  }
  if (residual(hi) < 0.0) return straight;
  for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double z = 0.5 * (lo + hi);
  const double y = y_of(z);
  if (!(y > 0.0)) return straight;
  const double f = 1.0 - y / r1;
  const double g = A * std::sqrt(y / mu);
  return {(rf - f * r0) / g, false};
}

enum class StmMethod { CentralDifference, Variational };

struct ShootingConfig {
  double tol = 1e-3;                // m
  int max_iter = 25;
  std::optional<double> fd_step;    // m/s; default max(1e-6, 1e-6 |v0|)
  double damping = 0.5;             // step scale on error regression
  StmMethod stm = StmMethod::CentralDifference;
  std::optional<double> dt;         // s; default tau / 2000 capped at 0.5 s
  double nudge = 1e-3;              // m along the outward facet normal
  bool record_samples = true;
  double max_condition = 1e12;

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("shooting tol must be positive");
    if (max_iter < 1) throw ConfigError("shooting max_iter must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("shooting damping must be in (0, 1]");
    if (fd_step && !(*fd_step > 0.0)) throw ConfigError("fd_step must be positive");
    if (dt && !(*dt > 0.0)) throw ConfigError("dt must be positive");
  }
};

struct ShootingResult {
  Vec3 v0 = Vec3::Zero();
  HopTrajectory trajectory;
  int iterations = 0;
  double final_error = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool lambert_fallback = false;
  Vec3 launch_point = Vec3::Zero();  // nudged launch position
  Vec3 target_point = Vec3::Zero();  // nudged target position
  std::vector<double> error_history;
};

// Phi = d r(tau) / d v0 by central differences of the propagator.
inline Mat3 stm_columns(const Environment& env, const Vec3& r0, const Vec3& v0, double tau, double fd_step,
                        std::optional<double> dt = std::nullopt) {
  const double step = dt.value_or(default_step(tau));
  PropagateOptions opts;
  opts.stop_at_impact = false;
  opts.record_samples = false;
  opts.escape_radius_factor = std::numeric_limits<double>::infinity();
  Mat3 phi;
  for (int j = 0; j < 3; ++j) {
    Vec3 dv = Vec3::Zero();
    dv[j] = fd_step;
    const auto plus = propagate(env, {r0, v0 + dv, 0.0}, tau, step, opts);
    const auto minus = propagate(env, {r0, v0 - dv, 0.0}, tau, step, opts);
    phi.col(j) = (plus.final_state.r - minus.final_state.r) / (2.0 * fd_step);
  }
  return phi;
}

// Forward-difference variant, used as an independent cross-check.
inline Mat3 stm_forward(const Environment& env, const Vec3& r0, const Vec3& v0, double tau, double fd_step,
                        std::optional<double> dt = std::nullopt) {
  const double step = dt.value_or(default_step(tau));
  PropagateOptions opts;
  opts.stop_at_impact = false;
  opts.record_samples = false;
  opts.escape_radius_factor = std::numeric_limits<double>::infinity();
  const auto base = propagate(env, {r0, v0, 0.0}, tau, step, opts);
  Mat3 phi;
  for (int j = 0; j < 3; ++j) {
    Vec3 dv = Vec3::Zero();
    dv[j] = fd_step;
    const auto plus = propagate(env, {r0, v0 + dv, 0.0}, tau, step, opts);
    phi.col(j) = (plus.final_state.r - base.final_state.r) / fd_step;
  }
  return phi;
}

inline double condition_number(const Mat3& m) {
  const Vec3 s = Eigen::JacobiSVD<Mat3>(m).singularValues();
  if (!(s(2) > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / s(2);
}

// Shooting solution of the hop boundary-value problem with prescribed time of
// flight: v <- v + Phi^{-1} (r_target - r(tau; v)), starting from the two-body
// Lambert guess. Launch and target are nudged off the surface along their
// facet normals. An update that increases the miss distance is retried once
// with the step scaled by `damping`. Unconverged solves return the best iterate.
inline ShootingResult solve_hop(const Environment& env, const SurfacePoint& from, const SurfacePoint& to, double tau,
                                const ShootingConfig& cfg = {}) {
  cfg.validate();
  if (!(tau > 0.0)) throw ConfigError("transfer time must be positive");
  const ShapeModel& shape = *env.shape;
  ShootingResult res;
  res.launch_point = from.position + cfg.nudge * shape.normals()[from.facet];
  res.target_point = to.position + cfg.nudge * shape.normals()[to.facet];
  if ((res.target_point - res.launch_point).norm() < 1e-9) {
    throw ConfigError("hop launch and target coincide");
  }
  const double dt = cfg.dt.value_or(default_step(tau));

  const LambertGuess guess = two_body_guess(env.mu(), res.launch_point, res.target_point, tau);
  res.lambert_fallback = guess.fallback;

  PropagateOptions opts;
  opts.stop_at_impact = false;
  opts.record_samples = false;
  opts.escape_radius_factor = std::numeric_limits<double>::infinity();

  struct Iterate {
    Vec3 v;
    Vec3 end;
    Vec3 end_v;
    bool subsurface = false;
    std::optional<Mat3> phi;
    double error = 0.0;
  };
  auto evaluate = [&](const Vec3& v) {
    Iterate it;
    it.v = v;
    if (cfg.stm == StmMethod::Variational) {
      const auto sens = propagate_with_sensitivity(env, {res.launch_point, v, 0.0}, tau, dt);
      it.end = sens.final_state.r;
      it.end_v = sens.final_state.v;
      it.subsurface = sens.subsurface;
      it.phi = sens.phi;
    } else {
      const auto tr = propagate(env, {res.launch_point, v, 0.0}, tau, dt, opts);
      it.end = tr.final_state.r;
      it.end_v = tr.final_state.v;
      it.subsurface = tr.subsurface;
    }
    it.error = (res.target_point - it.end).norm();
    return it;
  };
  auto jacobian = [&](Iterate& it) -> const Mat3& {
    if (!it.phi) {
      const double h = cfg.fd_step.value_or(std::max(1e-6, 1e-6 * it.v.norm()));
      it.phi = stm_columns(env, res.launch_point, it.v, tau, h, dt);
    }
    return *it.phi;
  };

  Iterate current = evaluate(guess.v0);
  Iterate best = current;
  for (int iter = 1;; ++iter) {
    res.iterations = iter;
    res.error_history.push_back(current.error);
    if (current.error < best.error) best = current;
    if (current.error <= cfg.tol) break;
    if (iter >= cfg.max_iter) break;

    const Mat3& phi = jacobian(current);
    if (condition_number(phi) > cfg.max_condition) {
      throw SingularStm("state transition matrix is numerically singular (condition > 1e12)");
    }
    const Vec3 dv = phi.partialPivLu().solve(res.target_point - current.end);
    Iterate next = evaluate(current.v + dv);
    if (next.error > current.error) {
      Iterate damped = evaluate(current.v + cfg.damping * dv);
      next = std::move(damped);
    }
    current = std::move(next);
  }

  res.v0 = best.v;
  res.final_error = best.error;
  res.converged = best.error <= cfg.tol;

  HopTrajectory& traj = res.trajectory;
  if (cfg.record_samples) {
    PropagateOptions rec = opts;
    rec.record_samples = true;
    traj = propagate(env, {res.launch_point, best.v, 0.0}, tau, dt, rec);
  } else {
    traj.launch = {res.launch_point, best.v, 0.0};
    traj.final_state = {best.end, best.end_v, tau};
    traj.subsurface = best.subsurface;
  }
  traj.tau = tau;
  traj.v0_mag = best.v.norm();
  traj.vf_mag = best.end_v.norm();
  if (res.converged) {
    traj.outcome = HopOutcome::Landed;
    traj.landing = to;
  } else {
    traj.outcome = HopOutcome::TimedOut;
  }
  if (traj.v0_mag > 0.0 && traj.vf_mag > 0.0) {
    std::tie(traj.theta_launch, traj.theta_land) = cone_angles(shape, from.facet, best.v, to.facet, best.end_v);
  }
  return res;
}

}  // namespace asterhop

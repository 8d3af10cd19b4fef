#pragma once

#include "asterhop/common.hpp"
#include "asterhop/gravity.hpp"
#include "asterhop/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace asterhop {

// Rotating body-fixed frame with constant spin. A null field disables gravity
// while keeping the shape for impact detection.
struct Environment {
  std::shared_ptr<const ShapeModel> shape;
  std::shared_ptr<const GravityField> field;
  Vec3 omega = Vec3::Zero();        // rad/s
  Vec3 disturbance = Vec3::Zero();  // m/s^2
  Vec3 control = Vec3::Zero();      // m/s^2

  static Environment make(std::shared_ptr<const GravityField> field, const Vec3& omega = Vec3::Zero()) {
    Environment env;
    env.shape = field->shape_ptr();
    env.field = std::move(field);
    env.omega = omega;
    return env;
  }

  static Environment gravity_free(std::shared_ptr<const ShapeModel> shape, const Vec3& omega = Vec3::Zero()) {
    Environment env;
    env.shape = std::move(shape);
    env.omega = omega;
    return env;
  }

  double mu() const { return field ? field->mu() : 0.0; }
};

struct RoverState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double t = 0.0;
};

enum class HopOutcome { Landed, Escaped, TimedOut };

inline const char* to_string(HopOutcome o) {
  switch (o) {
    case HopOutcome::Landed: return "Landed";
    case HopOutcome::Escaped: return "Escaped";
    case HopOutcome::TimedOut: return "TimedOut";
  }
  return "?";
}

struct HopTrajectory {
  RoverState launch;
  std::vector<RoverState> samples;  // includes the launch and final states
  HopOutcome outcome = HopOutcome::TimedOut;
  std::optional<SurfacePoint> landing;
  RoverState final_state;
  double tau = 0.0;
  double v0_mag = 0.0;
  double vf_mag = 0.0;
  double theta_launch = std::nan("");  // degrees
  double theta_land = std::nan("");    // degrees
  bool subsurface = false;
};

struct PropagateOptions {
  bool stop_at_impact = true;
  bool record_samples = true;
  double escape_radius_factor = 10.0;  // multiples of the bounding radius
  double impact_tolerance = 1e-4;      // m
};

// Default fixed step: tau / 2000, capped at 0.5 s.
inline double default_step(double tau) { return std::min(tau / 2000.0, 0.5); }

// Equation of motion in the rotating frame:
//   r'' = g + d + u - 2 w x r' - w x (w x r)
inline Vec3 acceleration(const Environment& env, const RoverState& s, double* laplacian = nullptr) {
  Vec3 a = env.disturbance + env.control - 2.0 * env.omega.cross(s.v) - env.omega.cross(env.omega.cross(s.r));
  if (env.field) {
    a += env.field->acceleration(s.r, laplacian);
  } else if (laplacian) {
    *laplacian = 0.0;
  }
  return a;
}

// Launch/landing cone angles in degrees: angle between v0 and the launch
// facet normal, and between -vf and the landing facet normal.
inline std::pair<double, double> cone_angles(const ShapeModel& model, std::uint32_t launch_facet, const Vec3& v0,
                                             std::uint32_t landing_facet, const Vec3& vf) {
  if (!(v0.norm() > 0.0) || !(vf.norm() > 0.0)) throw DegenerateGeometry("cone angle of a zero velocity");
  auto angle = [](const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)) * kDegPerRad; };
  return {angle(v0, model.normals()[launch_facet]), angle(-vf, model.normals()[landing_facet])};
}

namespace detail {

inline bool interior(const Environment& env, const Vec3& r, double laplacian) {
  if (env.field) return env.field->is_interior(laplacian);
  return env.shape->winding_number(r) > 0.5;
}

// One classical RK4 step of size h given the acceleration at the start state.
inline RoverState rk4_step(const Environment& env, const RoverState& s, const Vec3& a0, double h) {
  const RoverState s2{s.r + 0.5 * h * s.v, s.v + 0.5 * h * a0, s.t + 0.5 * h};
  const Vec3 a2 = acceleration(env, s2);
  const RoverState s3{s.r + 0.5 * h * s2.v, s.v + 0.5 * h * a2, s.t + 0.5 * h};
  const Vec3 a3 = acceleration(env, s3);
  const RoverState s4{s.r + h * s3.v, s.v + h * a3, s.t + h};
  const Vec3 a4 = acceleration(env, s4);
  return {s.r + (h / 6.0) * (s.v + 2.0 * s2.v + 2.0 * s3.v + s4.v),
          s.v + (h / 6.0) * (a0 + 2.0 * a2 + 2.0 * a3 + a4), s.t + h};
}

inline std::string where(const RoverState& s) {
  return " (t = " + std::to_string(s.t) + " s, r = [" + std::to_string(s.r.x()) + ", " + std::to_string(s.r.y()) +
         ", " + std::to_string(s.r.z()) + "])";
}

}  // namespace detail

// Fixed-step RK4 propagation. With stop_at_impact the first surface crossing
// is refined by bisection on the step until the position is within
// impact_tolerance of the mesh; otherwise subsurface passages only set the
// trajectory's subsurface flag and integration runs to tau_max.
inline HopTrajectory propagate(const Environment& env, const RoverState& s0, double tau_max, double dt,
                               const PropagateOptions& opts = {}) {
  if (!(dt > 0.0) || !(tau_max > 0.0)) throw ConfigError("propagate needs positive dt and tau_max");
  if (!s0.r.allFinite() || !s0.v.allFinite()) throw NumericalError("NonFiniteState", "non-finite launch state");
  const ShapeModel& shape = *env.shape;
  const auto steps = static_cast<std::size_t>(std::ceil(tau_max / dt - 1e-9));
  const double h = tau_max / static_cast<double>(std::max<std::size_t>(steps, 1));
  const double escape_radius = opts.escape_radius_factor * shape.bounding_radius();

  HopTrajectory traj;
  traj.launch = s0;
  traj.v0_mag = s0.v.norm();
  if (opts.record_samples) {
    traj.samples.reserve(steps + 1);
    traj.samples.push_back(s0);
  }

  RoverState s = s0;
  double lap = 0.0;
  Vec3 a;
  try {
    a = acceleration(env, s, &lap);
  } catch (const SingularEvaluation& e) {
    throw SingularEvaluation(std::string(e.what()) + detail::where(s));
  }
  if (detail::interior(env, s.r, lap)) {
    throw NumericalError("LaunchInsideBody", "launch point lies inside the body" + detail::where(s));
  }

  for (std::size_t k = 1; k <= steps; ++k) {
    RoverState next;
    Vec3 next_a;
    double next_lap = 0.0;
    try {
      next = detail::rk4_step(env, s, a, h);
      next.t = s0.t + static_cast<double>(k) * h;
      next_a = acceleration(env, next, &next_lap);
    } catch (const SingularEvaluation& e) {
      throw SingularEvaluation(std::string(e.what()) + detail::where(s));
    }
    if (!next.r.allFinite() || !next.v.allFinite()) {
      throw NumericalError("NonFiniteState", "integration produced a non-finite state" + detail::where(s));
    }

    if (detail::interior(env, next.r, next_lap)) {
      if (!opts.stop_at_impact) {
        traj.subsurface = true;
      } else {
        // Bisection on the sub-step size until the state sits on the surface.
        double lo = 0.0;
        double hi = h;
        RoverState hit = next;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          RoverState trial = detail::rk4_step(env, s, a, mid);
          if (shape.distance(trial.r) < opts.impact_tolerance) {
            hit = trial;
            break;
          }
          double trial_lap = 0.0;
          if (env.field) env.field->acceleration(trial.r, &trial_lap);
          if (detail::interior(env, trial.r, trial_lap)) {
            hi = mid;
          } else {
            lo = mid;
          }
          hit = trial;
        }
        if (opts.record_samples) traj.samples.push_back(hit);
        traj.final_state = hit;
        traj.outcome = HopOutcome::Landed;
        traj.landing = shape.project_to_surface(hit.r);
        traj.tau = hit.t - s0.t;
        traj.vf_mag = hit.v.norm();
        const auto launch = shape.project_to_surface(s0.r);
        if (traj.v0_mag > 0.0 && traj.vf_mag > 0.0) {
          std::tie(traj.theta_launch, traj.theta_land) =
              cone_angles(shape, launch.facet, s0.v, traj.landing->facet, hit.v);
        }
        return traj;
      }
    }

    s = next;
    a = next_a;
    if (opts.record_samples) traj.samples.push_back(s);
    if (s.r.norm() > escape_radius && s.r.dot(s.v) > 0.0) {
      traj.outcome = HopOutcome::Escaped;
      traj.final_state = s;
      traj.tau = s.t - s0.t;
      traj.vf_mag = s.v.norm();
      return traj;
    }
  }
  traj.outcome = HopOutcome::TimedOut;
  traj.final_state = s;
  traj.tau = s.t - s0.t;
  traj.vf_mag = s.v.norm();
  return traj;
}

// Fixed-duration propagation that also integrates the variational equations
// for Phi = d r(tau) / d v0:
//   P' = Q,  Q' = (grad grad U - [w]x[w]x) P - 2 [w]x Q,  P(0) = 0, Q(0) = I.
struct SensitivityResult {
  RoverState final_state;
  Mat3 phi = Mat3::Zero();
  bool subsurface = false;
  std::vector<RoverState> samples;
};

inline SensitivityResult propagate_with_sensitivity(const Environment& env, const RoverState& s0, double tau,
                                                    double dt, bool record_samples = false) {
  if (!(dt > 0.0) || !(tau > 0.0)) throw ConfigError("propagate needs positive dt and tau");
  const auto steps = static_cast<std::size_t>(std::ceil(tau / dt - 1e-9));
  const double h = tau / static_cast<double>(std::max<std::size_t>(steps, 1));
  const Mat3 w = skew(env.omega);
  const Mat3 centrifugal_jac = -w * w;
  const Mat3 coriolis_jac = -2.0 * w;

  struct State {
    Vec3 r, v;
    Mat3 p, q;
  };
  struct Rate {
    Vec3 dr, dv;
    Mat3 dp, dq;
    double laplacian;
  };
  auto rate = [&](const State& y) {
    Rate k;
    k.dr = y.v;
    Vec3 a = env.disturbance + env.control - 2.0 * env.omega.cross(y.v) - env.omega.cross(env.omega.cross(y.r));
    Mat3 jac = centrifugal_jac;
    k.laplacian = 0.0;
    if (env.field) {
      const FieldSample fs = env.field->acceleration_and_gradient(y.r);
      a += fs.acceleration;
      jac += fs.gradient;
      k.laplacian = fs.laplacian;
    }
    k.dv = a;
    k.dp = y.q;
    k.dq = jac * y.p + coriolis_jac * y.q;
    return k;
  };
  auto axpy = [](const State& y, const Rate& k, double c) {
    return State{y.r + c * k.dr, y.v + c * k.dv, y.p + c * k.dp, y.q + c * k.dq};
  };

  SensitivityResult out;
  State y{s0.r, s0.v, Mat3::Zero(), Mat3::Identity()};
  if (record_samples) {
    out.samples.reserve(steps + 1);
    out.samples.push_back(s0);
  }
  Rate k1;
  try {
    k1 = rate(y);
    for (std::size_t n = 1; n <= steps; ++n) {
      const Rate k2 = rate(axpy(y, k1, 0.5 * h));
      const Rate k3 = rate(axpy(y, k2, 0.5 * h));
      const Rate k4 = rate(axpy(y, k3, h));
      y.r += (h / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
      y.v += (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
      y.p += (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
      y.q += (h / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
      if (!y.r.allFinite() || !y.v.allFinite()) {
        throw NumericalError("NonFiniteState", "integration produced a non-finite state");
      }
      k1 = rate(y);
      if (detail::interior(env, y.r, k1.laplacian)) out.subsurface = true;
      if (record_samples) out.samples.push_back({y.r, y.v, s0.t + static_cast<double>(n) * h});
    }
  } catch (const SingularEvaluation& e) {
    throw SingularEvaluation(std::string(e.what()) + " during sensitivity propagation");
  }
  out.final_state = {y.r, y.v, s0.t + tau};
  out.phi = y.p;
  return out;
}

}  // namespace asterhop

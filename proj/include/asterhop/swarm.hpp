#pragma once

#include "asterhop/common.hpp"
#include "asterhop/dynamics.hpp"
#include "asterhop/lambert.hpp"
#include "asterhop/mesh.hpp"
#include "asterhop/parallel.hpp"
#include "asterhop/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asterhop {

enum class StepMode { Kinematic, Ballistic };

inline const char* to_string(StepMode m) { return m == StepMode::Kinematic ? "Kinematic" : "Ballistic"; }

struct SwarmConfig {
  int count = 15;                         // N
  double comm_range = 100.0;              // r_c, m
  std::optional<double> sensing_range;    // r_s, m; default r_c / 2 (coverage metric only)
  int min_degree = 2;                     // D
  std::optional<double> gain;             // alpha; default max_hop * r_c / 6
  double max_hop = 30.0;                  // m
  int iterations = 15;
  std::optional<double> hop_time;         // s, Ballistic mode transfer time
  std::optional<Vec3> deploy_center;      // SeededRandom placement disk center; default +x surface point
  std::optional<double> deploy_radius;    // m; default r_c
  int coverage_samples = 2000;
  unsigned threads = 1;

  double resolved_sensing_range() const { return sensing_range.value_or(0.5 * comm_range); }
  // A lone pair at r_c / 2 is pushed max_hop / 3 by repulsion alone.
  double resolved_gain() const { return gain.value_or(max_hop * comm_range / 6.0); }
  double resolved_deploy_radius() const { return deploy_radius.value_or(comm_range); }

  void validate() const {
    if (count < 2) throw ConfigError("swarm count must be >= 2");
    if (!(comm_range > 0.0)) throw ConfigError("swarm comm_range must be positive");
    if (min_degree < 0 || min_degree > count - 1) throw ConfigError("swarm min_degree must be in [0, N-1]");
    if (!(max_hop > 0.0)) throw ConfigError("swarm max_hop must be positive");
    if (!(resolved_gain() >= 0.0)) throw ConfigError("swarm gain must be non-negative");
    if (!(resolved_sensing_range() > 0.0)) throw ConfigError("swarm sensing_range must be positive");
    if (iterations < 0) throw ConfigError("swarm iterations must be >= 0");
    if (hop_time && !(*hop_time > 0.0)) throw ConfigError("swarm hop_time must be positive");
    if (!(resolved_deploy_radius() > 0.0)) throw ConfigError("swarm deploy_radius must be positive");
    if (coverage_samples < 1) throw ConfigError("swarm coverage_samples must be >= 1");
  }
};

struct SwarmState {
  std::vector<SurfacePoint> positions;
  std::vector<std::uint8_t> adjacency;  // row-major N x N
  std::vector<int> degrees;
  std::vector<Vec3> forces;             // forces that produced this state (zero initially)
  std::vector<Vec3> displacements;      // realized moves into this state
  std::vector<std::uint8_t> degraded;   // Ballistic solve failed; moved kinematically

  std::size_t size() const { return positions.size(); }
  bool linked(std::size_t i, std::size_t j) const { return adjacency[i * size() + j] != 0; }
};

// Rebuilds adjacency (link iff distance <= r_c) and degrees.
inline void update_links(SwarmState& s, double comm_range) {
  const std::size_t n = s.size();
  s.adjacency.assign(n * n, 0);
  s.degrees.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((s.positions[i].position - s.positions[j].position).norm() <= comm_range) {
        s.adjacency[i * n + j] = s.adjacency[j * n + i] = 1;
        ++s.degrees[i];
        ++s.degrees[j];
      }
    }
  }
}

inline SwarmState make_state(std::vector<SurfacePoint> positions, double comm_range) {
  SwarmState s;
  s.positions = std::move(positions);
  const std::size_t n = s.size();
  s.forces.assign(n, Vec3::Zero());
  s.displacements.assign(n, Vec3::Zero());
  s.degraded.assign(n, 0);
  update_links(s, comm_range);
  return s;
}

namespace detail {

inline void check_separation(std::span<const SurfacePoint> pos) {
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = i + 1; j < pos.size(); ++j) {
      if ((pos[i].position - pos[j].position).norm() < 1e-6) {
        throw CoincidentRovers("rovers " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
}

// Net virtual force on rover i: sum over j != i of repulsion
// (r_i - r_j) / |r_ij|^2, plus attraction (r_j - r_i) while deg_i < D.
inline Vec3 net_force(std::span<const SurfacePoint> pos, std::span<const int> degrees, int min_degree, std::size_t i) {
  const bool attract = degrees[i] < min_degree;
  Vec3 f = Vec3::Zero();
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (j == i) continue;
    const Vec3 d = pos[i].position - pos[j].position;
    f += d / d.squaredNorm();
    if (attract) f -= d;
  }
  return f;
}

}  // namespace detail

inline std::vector<Vec3> forces(const SwarmState& s, const SwarmConfig& cfg) {
  detail::check_separation(s.positions);
  std::vector<Vec3> out(s.size());
  parallel_for(s.size(), cfg.threads,
               [&](std::size_t i) { out[i] = detail::net_force(s.positions, s.degrees, cfg.min_degree, i); });
  return out;
}

// Plain double loop, kept as the test reference for forces().
inline std::vector<Vec3> forces_reference(const SwarmState& s, int min_degree) {
  const std::size_t n = s.size();
  std::vector<Vec3> out(n, Vec3::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Vec3 rij = s.positions[i].position - s.positions[j].position;
      const double d2 = rij.squaredNorm();
      if (std::sqrt(d2) < 1e-6) throw CoincidentRovers("coincident rovers");
      Vec3 fr = rij / d2;
      Vec3 fa = Vec3::Zero();
      if (s.degrees[i] < min_degree) fa = -rij;
      out[i] += fr;
      out[i] += fa;
    }
  }
  return out;
}

// One synchronous update: forces from the current state, displacement
// alpha * f clamped to max_hop, landing projected to the surface.
inline SwarmState step(const Environment& env, const SwarmState& s, const SwarmConfig& cfg, StepMode mode) {
  const ShapeModel& model = *env.shape;
  const auto f = forces(s, cfg);
  const double alpha = cfg.resolved_gain();
  std::vector<SurfacePoint> next(s.size());
  std::vector<std::uint8_t> degraded(s.size(), 0);
  parallel_for(s.size(), cfg.threads, [&](std::size_t i) {
    next[i] = model.step_toward(s.positions[i], alpha * f[i], cfg.max_hop);
    if (mode != StepMode::Ballistic) return;
    if ((next[i].position - s.positions[i].position).norm() < 1e-9) return;
    try {
      ShootingConfig sc;
      sc.record_samples = false;
      sc.stm = StmMethod::Variational;
      const auto res = solve_hop(env, s.positions[i], next[i], cfg.hop_time.value_or(600.0), sc);
      if (!res.converged || res.trajectory.subsurface) degraded[i] = 1;
    } catch (const Error&) {
      degraded[i] = 1;
    }
  });
  SwarmState out = make_state(std::move(next), cfg.comm_range);
  out.forces = f;
  for (std::size_t i = 0; i < s.size(); ++i) out.displacements[i] = out.positions[i].position - s.positions[i].position;
  out.degraded = std::move(degraded);
  return out;
}

struct SwarmMetrics {
  int iteration = 0;
  double min_distance = 0.0;
  double mean_distance = 0.0;
  int min_degree = 0;
  int components = 0;
  double coverage = 0.0;  // m^2 of surface within r_s of some rover
  int degraded = 0;
};

// Surface points shared by every coverage estimate of a run.
inline std::vector<Vec3> coverage_samples(const ShapeModel& model, int count, Rng rng) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pts.push_back(model.sample_surface(rng).position);
  return pts;
}

inline SwarmMetrics measure(const ShapeModel& model, const SwarmState& s, const SwarmConfig& cfg,
                            std::span<const Vec3> samples, int iteration) {
  SwarmMetrics m;
  m.iteration = iteration;
  const std::size_t n = s.size();
  m.min_distance = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (s.positions[i].position - s.positions[j].position).norm();
      m.min_distance = std::min(m.min_distance, d);
      sum += d;
      ++pairs;
    }
  }
  m.mean_distance = sum / static_cast<double>(pairs);
  m.min_degree = *std::min_element(s.degrees.begin(), s.degrees.end());

  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    label[i] = m.components;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (label[v] < 0 && s.linked(u, v)) {
          label[v] = m.components;
          stack.push_back(v);
        }
      }
    }
    ++m.components;
  }

  const double rs2 = cfg.resolved_sensing_range() * cfg.resolved_sensing_range();
  std::size_t hit = 0;
  for (const auto& p : samples) {
    for (const auto& r : s.positions) {
      if ((p - r.position).squaredNorm() <= rs2) {
        ++hit;
        break;
      }
    }
  }
  m.coverage = model.surface_area() * static_cast<double>(hit) / static_cast<double>(samples.size());
  for (auto d : s.degraded) m.degraded += d;
  return m;
}

// Uniform surface placement inside the deployment disk, rejecting points
// closer than 1 m to an already placed rover.
inline std::vector<SurfacePoint> random_placement(const ShapeModel& model, const SwarmConfig& cfg, Rng& rng) {
  const Vec3 center = cfg.deploy_center
                          ? *cfg.deploy_center
                          : model.project_to_surface(Vec3(2.0 * model.bounding_radius(), 0.0, 0.0)).position;
  const double radius = cfg.resolved_deploy_radius();
  std::vector<SurfacePoint> pos;
  constexpr int kMaxDraws = 1000000;
  for (int draw = 0; draw < kMaxDraws && pos.size() < static_cast<std::size_t>(cfg.count); ++draw) {
    const SurfacePoint p = model.sample_surface(rng);
    if ((p.position - center).norm() > radius) continue;
    bool clear = true;
    for (const auto& q : pos) clear = clear && (q.position - p.position).norm() >= 1.0;
    if (clear) pos.push_back(p);
  }
  if (pos.size() < static_cast<std::size_t>(cfg.count)) {
    throw ConfigError("deployment disk too small for the requested rover count");
  }
  return pos;
}

struct SwarmRun {
  std::vector<SwarmState> history;  // history[0] is the initial placement
  std::vector<SwarmMetrics> metrics;
};

inline SwarmRun simulate(const Environment& env, const SwarmConfig& cfg, StepMode mode, Rng& rng,
                         const std::optional<std::vector<SurfacePoint>>& explicit_positions = std::nullopt) {
  cfg.validate();
  const ShapeModel& model = *env.shape;
  if (mode == StepMode::Ballistic && !cfg.hop_time) throw ConfigError("Ballistic mode needs hop_time");
  std::vector<SurfacePoint> start;
  if (explicit_positions) {
    if (explicit_positions->size() != static_cast<std::size_t>(cfg.count)) {
      throw ConfigError("explicit placement size differs from swarm count");
    }
    start = *explicit_positions;
  } else {
    start = random_placement(model, cfg, rng);
  }
  const auto samples = coverage_samples(model, cfg.coverage_samples, rng.fork());
  SwarmRun run;
  run.history.push_back(make_state(std::move(start), cfg.comm_range));
  run.metrics.push_back(measure(model, run.history.back(), cfg, samples, 0));
  for (int it = 1; it <= cfg.iterations; ++it) {
    run.history.push_back(step(env, run.history.back(), cfg, mode));
    run.metrics.push_back(measure(model, run.history.back(), cfg, samples, it));
  }
  return run;
}

}  // namespace asterhop

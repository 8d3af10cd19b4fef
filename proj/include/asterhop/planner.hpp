#pragma once

#include "asterhop/common.hpp"
#include "asterhop/dynamics.hpp"
#include "asterhop/gravity.hpp"
#include "asterhop/kdtree.hpp"
#include "asterhop/lambert.hpp"
#include "asterhop/mesh.hpp"
#include "asterhop/parallel.hpp"
#include "asterhop/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace asterhop {

struct HopDiagnostics {
  Vec3 v0 = Vec3::Zero();
  double speed = 0.0;                                          // |v0|, m/s
  double escape_speed = std::numeric_limits<double>::infinity();  // v_e at launch, m/s
  double theta_launch = std::nan("");                          // deg
  double theta_land = std::nan("");                            // deg
  double final_error = std::numeric_limits<double>::infinity();  // m
  int iterations = 0;
  bool converged = false;
  bool subsurface = false;
  std::string failure;  // numerical error code, if the solve threw
};

// Ordered hop sequence: positions Pi (start .. goal), transfer times Gamma,
// and, once evaluated, launch speeds Lambda with per-hop diagnostics.
struct HopPlan {
  std::vector<SurfacePoint> positions;
  std::vector<double> times;
  std::vector<double> speeds;
  std::vector<HopDiagnostics> hops;
  double f = 0.0;
  double J = std::numeric_limits<double>::infinity();
  bool evaluated = false;
  bool pruned = false;  // evaluation stopped early; J is a lower bound

  std::size_t hop_count() const { return times.size(); }

  // All hops converged, above-surface, within the cones and below escape speed.
  bool feasible() const { return evaluated && !pruned && J == f; }
};

// RRT over surface points. Vertex 0 is the root; tau[i] is the transfer time
// of the edge parent[i] -> i.
struct Tree {
  std::vector<SurfacePoint> vertices;
  std::vector<int> parent;
  std::vector<double> tau;
  std::vector<int> depth;

  // Root-to-vertex path as vertex ids.
  std::vector<int> path_to(int v) const {
    std::vector<int> path;
    for (int cur = v; cur >= 0; cur = parent[static_cast<std::size_t>(cur)]) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
  }
};

struct PlannerConfig {
  int iterations = 300;                  // K, RRT growth steps
  double max_hop = 0.0;                  // Delta_max, m (required)
  std::optional<double> min_hop;         // a of Delta ~ U(a, b); default 0.3 Delta_max
  double tau_mean = 0.0;                 // mu_tau, s (required)
  std::optional<double> tau_sigma;       // sigma_tau, s; default 0.1 mu_tau
  std::optional<double> goal_tolerance;  // eps_goal, m; default Delta_max / 10
  int population = 50;                   // N
  int generations = 51;                  // G
  std::optional<double> sigma_time;      // sigma_Gamma, s; default 0.1 mu_tau
  std::optional<double> sigma_position;  // sigma_Pi, m; default 0.2 Delta_max
  double penalty_weight = 100.0;         // w
  double infeasible_penalty = 1e3;       // m/s per unconverged or subsurface hop
  double cone_limit = 45.0;              // deg
  int sample_attempts = 10;              // RRT retries per initial individual
  ShootingConfig shooting = default_shooting();
  unsigned threads = 1;

  // Fitness evaluation uses the variational sensitivity and a coarse step
  // (20 RK4 steps per hop): several thousand hop solves per run.
  static ShootingConfig default_shooting() {
    ShootingConfig s;
    s.stm = StmMethod::Variational;
    s.record_samples = false;
    return s;
  }
  int steps_per_hop = 20;  // used when shooting.dt is unset

  double resolved_min_hop() const { return min_hop.value_or(0.3 * max_hop); }
  double resolved_tau_sigma() const { return tau_sigma.value_or(0.1 * tau_mean); }
  double resolved_goal_tolerance() const { return goal_tolerance.value_or(max_hop / 10.0); }
  double resolved_sigma_time() const { return sigma_time.value_or(0.1 * tau_mean); }
  double resolved_sigma_position() const { return sigma_position.value_or(0.2 * max_hop); }
  double tau_floor() const { return 0.1 * tau_mean; }

  void validate() const {
    if (iterations < 1) throw ConfigError("planner iterations (K) must be >= 1");
    if (!(max_hop > 0.0)) throw ConfigError("planner max_hop must be positive");
    if (!(resolved_min_hop() > 0.0 && resolved_min_hop() <= max_hop)) {
      throw ConfigError("planner min_hop must be in (0, max_hop]");
    }
    if (!(tau_mean > 0.0)) throw ConfigError("planner tau_mean must be positive");
    if (!(resolved_tau_sigma() > 0.0)) throw ConfigError("planner tau_sigma must be positive");
    if (!(resolved_goal_tolerance() >= 0.0)) throw ConfigError("planner goal_tolerance must be non-negative");
    if (population < 2 || population % 2 != 0) throw ConfigError("planner population must be even and >= 2");
    if (generations < 0) throw ConfigError("planner generations must be >= 0");
    if (!(resolved_sigma_time() > 0.0) || !(resolved_sigma_position() > 0.0)) {
      throw ConfigError("planner mutation sigmas must be positive");
    }
    if (!(penalty_weight >= 0.0) || !(infeasible_penalty >= 0.0)) {
      throw ConfigError("planner penalty constants must be non-negative");
    }
    if (!(cone_limit > 0.0)) throw ConfigError("planner cone_limit must be positive");
    if (steps_per_hop < 1) throw ConfigError("planner steps_per_hop must be >= 1");
    if (sample_attempts < 1) throw ConfigError("planner sample_attempts must be >= 1");
    shooting.validate();
  }
};

namespace detail {

inline double truncated_tau(Rng& rng, double mean, double sigma, double floor) {
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.normal(mean, sigma);
    if (t >= floor) return t;
  }
  return floor;
}

// Drops zero-length hops left by crossover or mutation.
inline void merge_duplicates(HopPlan& plan) {
  std::vector<SurfacePoint> pos{plan.positions.front()};
  std::vector<double> times;
  for (std::size_t i = 1; i < plan.positions.size(); ++i) {
    if ((plan.positions[i].position - pos.back().position).norm() < 1e-9) {
      if (i + 1 == plan.positions.size()) pos.back() = plan.positions[i];
      continue;
    }
    pos.push_back(plan.positions[i]);
    times.push_back(plan.times[i - 1]);
  }
  plan.positions = std::move(pos);
  plan.times = std::move(times);
}

inline void reset_evaluation(HopPlan& plan) {
  plan.speeds.clear();
  plan.hops.clear();
  plan.f = 0.0;
  plan.J = std::numeric_limits<double>::infinity();
  plan.evaluated = false;
  plan.pruned = false;
}

}  // namespace detail

// Grows an RRT of K steps from `start` (Euclidean nearest neighbor, steer by
// at most `max_hop`, project to the surface) and returns the root path with
// the fewest hops (ties: smallest gap) to a vertex within `max_hop` of the
// goal, closing with a hop onto the goal unless already within eps_goal.
inline HopPlan generate_random_sample(const ShapeModel& model, const SurfacePoint& start, const SurfacePoint& goal,
                                      int iterations, double max_hop, double tau_mean, double tau_sigma,
                                      double goal_tolerance, Rng& rng, Tree* tree_out = nullptr) {
  if (iterations < 1) throw ConfigError("RRT iterations must be >= 1");
  if (!(max_hop > 0.0) || !(tau_mean > 0.0) || !(tau_sigma > 0.0)) {
    throw ConfigError("RRT needs positive max_hop, tau_mean and tau_sigma");
  }
  const double tau_floor = 0.1 * tau_mean;
  Tree tree;
  tree.vertices.push_back(start);
  tree.parent.push_back(-1);
  tree.tau.push_back(0.0);
  tree.depth.push_back(0);
  KdTree index;
  index.insert(start.position);

  for (int k = 0; k < iterations; ++k) {
    const SurfacePoint rand = model.sample_surface(rng);
    const auto near = index.nearest(rand.position);
    const SurfacePoint& from = tree.vertices[near.index];
    const double dist = std::sqrt(near.squared_distance);
    SurfacePoint next = rand;
    if (dist > max_hop) {
      next = model.step_toward(from, rand.position - from.position, max_hop);
    }
    const double tau = detail::truncated_tau(rng, tau_mean, tau_sigma, tau_floor);
    if ((next.position - from.position).norm() < 1e-9) continue;
    tree.vertices.push_back(next);
    tree.parent.push_back(static_cast<int>(near.index));
    tree.tau.push_back(tau);
    tree.depth.push_back(tree.depth[near.index] + 1);
    index.insert(next.position);
  }

  int best = -1;
  int best_hops = std::numeric_limits<int>::max();
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tree.vertices.size(); ++i) {
    const double gap = (tree.vertices[i].position - goal.position).norm();
    if (gap > max_hop) continue;
    const int hops = tree.depth[i] + (gap > goal_tolerance ? 1 : 0);
    if (hops == 0) continue;  // start already within tolerance of the goal
    if (hops < best_hops || (hops == best_hops && gap < best_gap)) {
      best = static_cast<int>(i);
      best_hops = hops;
      best_gap = gap;
    }
  }
  if (best < 0) throw GoalUnreached("RRT did not reach within max_hop of the goal");

  HopPlan plan;
  const auto path = tree.path_to(best);
  for (std::size_t i = 0; i < path.size(); ++i) {
    plan.positions.push_back(tree.vertices[static_cast<std::size_t>(path[i])]);
    if (i > 0) plan.times.push_back(tree.tau[static_cast<std::size_t>(path[i])]);
  }
  if (best_gap > goal_tolerance) {
    plan.positions.push_back(goal);
    plan.times.push_back(detail::truncated_tau(rng, tau_mean, tau_sigma, tau_floor));
  } else {
    plan.positions.back() = goal;  // snap
  }
  if (tree_out) *tree_out = std::move(tree);
  return plan;
}

inline HopPlan generate_random_sample(const ShapeModel& model, const SurfacePoint& start, const SurfacePoint& goal,
                                      const PlannerConfig& cfg, double max_hop, Rng& rng) {
  return generate_random_sample(model, start, goal, cfg.iterations, max_hop, cfg.tau_mean, cfg.resolved_tau_sigma(),
                                cfg.resolved_goal_tolerance(), rng);
}

// Penalized cost contributed by one hop:
//   speed + w [max(0, v0 - ve)^2 + max(0, (th1 - 45)/45)^2 + max(0, (th2 - 45)/45)^2]
// plus the fixed infeasibility price for unconverged or subsurface hops.
inline double hop_cost(const HopDiagnostics& h, const PlannerConfig& cfg) {
  auto g = [](double c) { return c > 0.0 ? c * c : 0.0; };
  double penalty = g(h.speed - h.escape_speed);
  if (std::isfinite(h.theta_launch)) penalty += g((h.theta_launch - cfg.cone_limit) / cfg.cone_limit);
  if (std::isfinite(h.theta_land)) penalty += g((h.theta_land - cfg.cone_limit) / cfg.cone_limit);
  double cost = h.speed + cfg.penalty_weight * penalty;
  if (!h.converged || h.subsurface) cost += cfg.infeasible_penalty;
  return cost;
}

inline ShootingConfig hop_shooting_config(const PlannerConfig& cfg, double tau) {
  ShootingConfig s = cfg.shooting;
  if (!s.dt) s.dt = tau / cfg.steps_per_hop;
  return s;
}

inline HopDiagnostics solve_plan_hop(const Environment& env, const SurfacePoint& from, const SurfacePoint& to,
                                     double tau, const PlannerConfig& cfg) {
  HopDiagnostics d;
  try {
    const auto res = solve_hop(env, from, to, tau, hop_shooting_config(cfg, tau));
    d.v0 = res.v0;
    d.speed = res.v0.norm();
    d.theta_launch = res.trajectory.theta_launch;
    d.theta_land = res.trajectory.theta_land;
    d.final_error = res.final_error;
    d.iterations = res.iterations;
    d.converged = res.converged;
    d.subsurface = res.trajectory.subsurface;
    if (env.field) d.escape_speed = escape_speed(*env.field, res.launch_point, env.omega);
  } catch (const NumericalError& e) {
    d.failure = e.code();
  } catch (const ConfigError& e) {
    d.failure = "ConfigError";
  }
  return d;
}

// Solves every hop and prices the plan. Evaluation stops once the running
// cost reaches `bound` (the plan is then marked pruned).
inline void evaluate_plan(const Environment& env, HopPlan& plan, const PlannerConfig& cfg,
                          double bound = std::numeric_limits<double>::infinity()) {
  if (plan.hop_count() < 1 || plan.positions.size() != plan.hop_count() + 1) {
    throw ConfigError("plan needs >= 1 hop and |positions| = |times| + 1");
  }
  detail::reset_evaluation(plan);
  double J = 0.0;
  for (std::size_t i = 0; i < plan.hop_count(); ++i) {
    const auto d = solve_plan_hop(env, plan.positions[i], plan.positions[i + 1], plan.times[i], cfg);
    plan.f += d.speed;
    J += hop_cost(d, cfg);
    plan.speeds.push_back(d.speed);
    plan.hops.push_back(d);
    if (J >= bound && i + 1 < plan.hop_count()) {
      plan.pruned = true;
      break;
    }
  }
  plan.J = J;
  plan.evaluated = true;
}

// Recomputes J from stored diagnostics (no solves).
inline double recompute_cost(const HopPlan& plan, const PlannerConfig& cfg) {
  double J = 0.0;
  for (const auto& h : plan.hops) J += hop_cost(h, cfg);
  return J;
}

// Single-point tail swap. Cut indices i_a in [1, n_a], i_b in [1, n_b]:
//   child_a = a.Pi[0, i_a) + b.Pi[i_b, end],   child_b = b.Pi[0, i_b) + a.Pi[i_a, end].
// The junction hop keeps the transfer time of the hop it replaces. Junctions
// longer than max_hop are bridged by projected midpoints (depth <= 4);
// otherwise both children revert to the parents.
inline std::pair<HopPlan, HopPlan> crossover(const ShapeModel& model, const HopPlan& a, const HopPlan& b,
                                             double max_hop, Rng& rng) {
  if (a.positions.size() < 2 || b.positions.size() < 2) throw ConfigError("crossover needs plans with >= 1 hop");
  const std::size_t ia = 1 + rng.index(a.hop_count());
  const std::size_t ib = 1 + rng.index(b.hop_count());

  auto bridge = [&](const SurfacePoint& p, const SurfacePoint& q, double tau, std::vector<SurfacePoint>& pos,
                    std::vector<double>& times) {
    // Appends the hops p -> ... -> q (p already in pos).
    auto rec = [&](auto&& self, const SurfacePoint& x, const SurfacePoint& y, int depth) -> bool {
      if ((y.position - x.position).norm() <= max_hop) {
        pos.push_back(y);
        times.push_back(tau);
        return true;
      }
      if (depth == 4) return false;
      const SurfacePoint m = model.project_to_surface(0.5 * (x.position + y.position));
      return self(self, x, m, depth + 1) && self(self, m, y, depth + 1);
    };
    return rec(rec, p, q, 0);
  };

  auto splice = [&](const HopPlan& head, std::size_t ih, const HopPlan& tail, std::size_t it,
                    HopPlan& child) -> bool {
    child = HopPlan{};
    for (std::size_t i = 0; i < ih; ++i) child.positions.push_back(head.positions[i]);
    for (std::size_t i = 0; i + 1 < ih; ++i) child.times.push_back(head.times[i]);
    if (!bridge(head.positions[ih - 1], tail.positions[it], head.times[ih - 1], child.positions, child.times)) {
      return false;
    }
    for (std::size_t i = it + 1; i < tail.positions.size(); ++i) {
      child.positions.push_back(tail.positions[i]);
      child.times.push_back(tail.times[i - 1]);
    }
    detail::merge_duplicates(child);
    return child.hop_count() >= 1;
  };

  std::pair<HopPlan, HopPlan> kids;
  if (!splice(a, ia, b, ib, kids.first) || !splice(b, ib, a, ia, kids.second)) {
    kids = {a, b};
  }
  detail::reset_evaluation(kids.first);
  detail::reset_evaluation(kids.second);
  return kids;
}

// Gaussian mutation: every transfer time (floored at 0.1 mu_tau) and every
// interior position (re-projected to the surface); endpoints stay fixed.
inline void mutate(const ShapeModel& model, HopPlan& plan, const PlannerConfig& cfg, Rng& rng) {
  const double st = cfg.resolved_sigma_time();
  const double sp = cfg.resolved_sigma_position();
  for (auto& t : plan.times) t = std::max(cfg.tau_floor(), t + rng.normal(0.0, st));
  for (std::size_t i = 1; i + 1 < plan.positions.size(); ++i) {
    const Vec3 p = plan.positions[i].position + Vec3(rng.normal(0.0, sp), rng.normal(0.0, sp), rng.normal(0.0, sp));
    plan.positions[i] = model.project_to_surface(p);
  }
  detail::merge_duplicates(plan);
  detail::reset_evaluation(plan);
}

struct GenerationStats {
  int generation = 0;
  double best_J = 0.0;
  double mean_J = 0.0;
  double std_J = 0.0;
  double best_f = 0.0;
  int feasible = 0;    // feasible members of the population
  int evaluated = 0;   // plans evaluated this generation
  int pruned = 0;      // of which stopped early
};

struct OptimizeResult {
  HopPlan best;             // best feasible plan seen, else lowest-J member
  HopPlan population_best;  // lowest J in the final population
  std::vector<GenerationStats> history;  // generation 0 is the initial population
  std::size_t evaluations = 0;
};

namespace detail {

inline GenerationStats population_stats(int gen, const std::vector<HopPlan>& pop) {
  GenerationStats s;
  s.generation = gen;
  s.best_J = pop.front().J;
  s.best_f = pop.front().f;
  double sum = 0.0;
  for (const auto& p : pop) {
    sum += p.J;
    if (p.feasible()) ++s.feasible;
  }
  s.mean_J = sum / static_cast<double>(pop.size());
  double var = 0.0;
  for (const auto& p : pop) var += (p.J - s.mean_J) * (p.J - s.mean_J);
  s.std_J = std::sqrt(var / static_cast<double>(pop.size()));
  return s;
}

// Samples until success or `attempts` GoalUnreached failures.
inline std::optional<HopPlan> try_sample(const ShapeModel& model, const SurfacePoint& start, const SurfacePoint& goal,
                                         const PlannerConfig& cfg, Rng& rng, int attempts) {
  for (int i = 0; i < attempts; ++i) {
    const double delta = rng.uniform(cfg.resolved_min_hop(), cfg.max_hop);
    try {
      return generate_random_sample(model, start, goal, cfg, delta, rng);
    } catch (const GoalUnreached&) {
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Evolutionary refinement of RRT samples. Each generation: N/2 offspring from
// crossover of random pairs, Gaussian mutation, N/2 fresh RRT immigrants,
// evaluation, and elitist truncation to the best N (ties keep the older plan).
// Offspring that provably rank below the current N-th plan are pruned early.
inline OptimizeResult optimize(const Environment& env, const SurfacePoint& start, const SurfacePoint& goal,
                               const PlannerConfig& cfg, Rng& rng) {
  cfg.validate();
  const ShapeModel& model = *env.shape;
  const auto n = static_cast<std::size_t>(cfg.population);
  OptimizeResult out;
  std::optional<HopPlan> best_feasible;

  auto evaluate_all = [&](std::vector<HopPlan>& plans, double bound) {
    parallel_for(plans.size(), cfg.threads, [&](std::size_t i) { evaluate_plan(env, plans[i], cfg, bound); });
    out.evaluations += plans.size();
    for (const auto& p : plans) {
      if (p.feasible() && (!best_feasible || p.J < best_feasible->J)) best_feasible = p;
    }
  };
  auto rank = [](std::vector<HopPlan>& plans) {
    std::stable_sort(plans.begin(), plans.end(), [](const HopPlan& x, const HopPlan& y) { return x.J < y.J; });
  };

  std::vector<HopPlan> pop;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto p = detail::try_sample(model, start, goal, cfg, rng, cfg.sample_attempts)) pop.push_back(std::move(*p));
  }
  if (pop.empty()) throw GoalUnreached("no initial RRT sample reached the goal");
  evaluate_all(pop, std::numeric_limits<double>::infinity());
  rank(pop);
  {
    auto s = detail::population_stats(0, pop);
    s.evaluated = static_cast<int>(pop.size());
    out.history.push_back(s);
  }

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<HopPlan> fresh;
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t k = 0; fresh.size() < n / 2; k += 2) {
      const HopPlan& a = pop[order[k % order.size()]];
      const HopPlan& b = pop[order[(k + 1) % order.size()]];
      auto kids = crossover(model, a, b, cfg.max_hop, rng);
      mutate(model, kids.first, cfg, rng);
      fresh.push_back(std::move(kids.first));
      if (fresh.size() < n / 2) {
        mutate(model, kids.second, cfg, rng);
        fresh.push_back(std::move(kids.second));
      }
    }
    for (std::size_t i = 0; i < n / 2; ++i) {
      if (auto p = detail::try_sample(model, start, goal, cfg, rng, 1)) fresh.push_back(std::move(*p));
    }
    // A newcomer whose running cost reaches the current N-th J can never be kept.
    const double bound = pop.size() >= n ? pop.back().J : std::numeric_limits<double>::infinity();
    evaluate_all(fresh, bound);
    int pruned = 0;
    for (const auto& p : fresh) pruned += p.pruned ? 1 : 0;

    const int evaluated = static_cast<int>(fresh.size());
    for (auto& p : fresh) pop.push_back(std::move(p));
    rank(pop);
    if (pop.size() > n) pop.resize(n);
    auto s = detail::population_stats(gen, pop);
    s.evaluated = evaluated;
    s.pruned = pruned;
    out.history.push_back(s);
  }

  out.population_best = pop.front();
  out.best = best_feasible ? *best_feasible : pop.front();
  return out;
}

struct WaypointPlanResult {
  HopPlan plan;                          // concatenated route
  std::vector<OptimizeResult> segments;  // one per consecutive pair
};

// Optimizes each consecutive segment independently and concatenates the
// routes; shared waypoints appear once and f, J are sums over segments.
inline WaypointPlanResult plan_with_waypoints(const Environment& env, const std::vector<SurfacePoint>& points,
                                              const PlannerConfig& cfg, Rng& rng) {
  if (points.size() < 2) throw ConfigError("waypoint planning needs a start and a goal");
  WaypointPlanResult res;
  HopPlan& plan = res.plan;
  plan.positions.push_back(points.front());
  plan.evaluated = true;
  plan.J = 0.0;
  for (std::size_t s = 0; s + 1 < points.size(); ++s) {
    OptimizeResult seg;
    try {
      seg = optimize(env, points[s], points[s + 1], cfg, rng);
    } catch (const GoalUnreached& e) {
      throw GoalUnreached("segment " + std::to_string(s) + ": " + e.what());
    }
    const HopPlan& p = seg.best;
    plan.positions.insert(plan.positions.end(), p.positions.begin() + 1, p.positions.end());
    plan.times.insert(plan.times.end(), p.times.begin(), p.times.end());
    plan.speeds.insert(plan.speeds.end(), p.speeds.begin(), p.speeds.end());
    plan.hops.insert(plan.hops.end(), p.hops.begin(), p.hops.end());
    plan.f += p.f;
    plan.J += p.J;
    res.segments.push_back(std::move(seg));
  }
  return res;
}

}  // namespace asterhop

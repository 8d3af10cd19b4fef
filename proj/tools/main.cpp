// asterhop: scenario-driven front end for the hopping library.
//
//   asterhop <gravity|hop|plan|swarm|localize> --scenario FILE [--seed N] [--out DIR] [--threads N]
//
// Exit codes: 0 ok, 2 configuration, 3 mesh, 4 numerical (including an
// unconverged hop or an infeasible plan; outputs are still written).

#include "output.hpp"
#include "scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace asterhop;
using namespace asterhop::cli;

namespace {

struct CommonArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 0;
};

// Per-command extras.
struct ExtraArgs {
  std::vector<std::string> points;     // gravity --point
  std::string from, to;                // hop
  double tau = 0.0;
  std::string start, goal;             // plan
  std::vector<std::string> waypoints;
  std::string truth;                   // localize
};

Vec3 parse_vec3(const std::string& text, const char* what) {
  std::stringstream in(text);
  Vec3 v;
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(in, tok, ',')) throw ConfigError(std::string(what) + ": expected x,y,z");
    try {
      std::size_t used = 0;
      v[i] = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": bad number '" + tok + "'");
    }
  }
  if (std::getline(in, tok, ',')) throw ConfigError(std::string(what) + ": expected x,y,z");
  return v;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("asterhop");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ASTERHOP_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("ignoring unknown ASTERHOP_LOG level '{}'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

int fail(ErrorKind kind, const std::string& code, const std::string& message) {
  const char* name = kind == ErrorKind::Config ? "config" : kind == ErrorKind::Mesh ? "mesh" : "numerical";
  Json err;
  err["error"] = {{"kind", name}, {"code", code}, {"message", message}, {"exit_code", static_cast<int>(kind)}};
  std::cerr << err.dump() << std::endl;
  return static_cast<int>(kind);
}

// ---------------------------------------------------------------------------
// Body and environment

std::shared_ptr<const ShapeModel> build_shape(const ShapeSpec& spec, const Scenario& sc) {
  if (spec.kind == "obj") {
    const fs::path path = resolve(sc, spec.path);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open shape file " + path.string());
    LoadOptions opts;
    opts.scale = spec.scale;
    opts.recenter = spec.recenter;
    return std::make_shared<const ShapeModel>(load_shape(in, ShapeFormat::Obj, opts));
  }
  shapes::MeshData m;
  if (spec.kind == "icosphere") {
    m = shapes::icosphere(spec.radius, spec.subdivisions);
  } else if (spec.kind == "ellipsoid") {
    m = shapes::ellipsoid(spec.semi_axes, spec.subdivisions);
  } else if (spec.kind == "box") {
    m = shapes::box(spec.size);
  } else if (spec.kind == "lumpy_ellipsoid") {
    m = shapes::lumpy_ellipsoid(spec.semi_axes, spec.subdivisions, spec.relief, spec.seed);
  } else {
    m = shapes::rough_site_body(spec.semi_axes, spec.subdivisions, spec.relief, spec.seed, spec.site, spec.site_angle,
                                spec.levels, spec.roughness, spec.roughness_seed);
  }
  for (auto& v : m.vertices) v *= spec.scale;
  return std::make_shared<const ShapeModel>(std::move(m.vertices), std::move(m.facets), spec.recenter);
}

Environment build_env(const Scenario& sc, bool need_gravity) {
  auto shape = build_shape(sc.shape, sc);
  const auto& d = shape->diagnostics();
  spdlog::info("shape: {} vertices, {} facets, volume {:.6g} m^3", shape->vertex_count(), shape->facet_count(),
               shape->volume());
  if (d.ignored_records > 0) spdlog::warn("shape: ignored {} unsupported OBJ records", d.ignored_records);
  if (!sc.density) {
    if (need_gravity) throw ConfigError("scenario.density is required for this command");
    return Environment::gravity_free(shape, sc.omega);
  }
  auto field = std::make_shared<const GravityField>(shape, *sc.density,
                                                    sc.gravitational_constant.value_or(GravityField::kDefaultG));
  return Environment::make(field, sc.omega);
}

SurfacePoint on_surface(const ShapeModel& model, const Vec3& p) { return model.project_to_surface(p); }

Json surface_json(const SurfacePoint& p) {
  return {{"position", vec_json(p.position)}, {"facet", p.facet}};
}

Json body_json(const Environment& env) {
  const ShapeModel& m = *env.shape;
  Json j;
  j["vertices"] = m.vertex_count();
  j["facets"] = m.facet_count();
  j["volume"] = m.volume();
  j["surface_area"] = m.surface_area();
  j["center_of_mass"] = vec_json(m.center_of_mass());
  j["center_of_mass_offset"] = m.center_of_mass().norm();
  j["bounding_radius"] = m.bounding_radius();
  if (env.field) {
    j["mass"] = env.field->mass();
    j["mu"] = env.field->mu();
  }
  return j;
}

Json header(const char* command, const Scenario& sc) {
  Json j;
  j["command"] = command;
  j["seed"] = sc.seed;
  j["config"] = resolved_json(sc);
  return j;
}

// ---------------------------------------------------------------------------
// gravity

int cmd_gravity(const Scenario& sc, const fs::path& out, unsigned threads) {
  const auto env = build_env(sc, true);
  std::vector<Vec3> pts = sc.gravity.points;
  if (sc.gravity.grid) {
    const auto& g = *sc.gravity.grid;
    auto axis = [&](int a, int i) {
      const int n = g.counts[static_cast<std::size_t>(a)];
      return n == 1 ? g.min[a] : g.min[a] + (g.max[a] - g.min[a]) * i / (n - 1);
    };
    for (int k = 0; k < g.counts[2]; ++k) {
      for (int j = 0; j < g.counts[1]; ++j) {
        for (int i = 0; i < g.counts[0]; ++i) pts.emplace_back(axis(0, i), axis(1, j), axis(2, k));
      }
    }
  }
  if (pts.empty()) throw ConfigError("gravity: no field points (scenario.gravity.points/grid or --point)");
  spdlog::info("gravity: evaluating {} points", pts.size());
  const auto samples = env.field->evaluate_batch(pts, threads);

  CsvWriter csv(out / "field.csv", "x,y,z,U,gx,gy,gz,gxx,gxy,gxz,gyy,gyz,gzz,laplacian,interior");
  int interior = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& s = samples[i];
    const Mat3& G = s.gradient;
    const bool inside = env.field->is_interior(s.laplacian);
    interior += inside ? 1 : 0;
    csv.row(pts[i], s.potential, s.acceleration, G(0, 0), G(0, 1), G(0, 2), G(1, 1), G(1, 2), G(2, 2), s.laplacian,
            inside);
  }
  Json j = header("gravity", sc);
  j["body"] = body_json(env);
  j["density"] = env.field->density();
  j["gravitational_constant"] = env.field->gravitational_constant();
  j["points"] = pts.size();
  j["interior_points"] = interior;
  write_json(out / "summary.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// hop

void write_trajectory(const fs::path& path, const HopTrajectory& tr) {
  CsvWriter csv(path, "t,x,y,z,vx,vy,vz");
  for (const auto& s : tr.samples) csv.row(s.t, s.r, s.v);
}

int cmd_hop(const Scenario& sc, const fs::path& out) {
  if (!sc.hop.from || !sc.hop.to) throw ConfigError("hop: endpoints missing (scenario.hop.from/to or --from/--to)");
  const auto env = build_env(sc, false);
  const auto from = on_surface(*env.shape, *sc.hop.from);
  const auto to = on_surface(*env.shape, *sc.hop.to);
  ShootingConfig cfg = sc.shooting;
  cfg.record_samples = true;
  const auto res = solve_hop(env, from, to, sc.hop.tau, cfg);
  const auto& tr = res.trajectory;

  const double cone = sc.plan.config.cone_limit;
  const double ve = env.field ? escape_speed(*env.field, res.launch_point, env.omega)
                              : std::numeric_limits<double>::infinity();
  const bool cone_ok = tr.theta_launch <= cone && tr.theta_land <= cone;
  const bool below_escape = res.v0.norm() < ve;
  const bool clean = res.converged && !tr.subsurface && cone_ok && below_escape;

  write_trajectory(out / "trajectory.csv", tr);
  Json j = header("hop", sc);
  j["from"] = surface_json(from);
  j["to"] = surface_json(to);
  j["tau"] = sc.hop.tau;
  j["v0"] = vec_json(res.v0);
  j["speed"] = res.v0.norm();
  j["escape_speed"] = num_json(ve);
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  j["final_error"] = res.final_error;
  j["error_history"] = res.error_history;
  j["lambert_fallback"] = res.lambert_fallback;
  j["launch_point"] = vec_json(res.launch_point);
  j["target_point"] = vec_json(res.target_point);
  j["outcome"] = to_string(tr.outcome);
  j["theta_launch"] = num_json(tr.theta_launch);
  j["theta_land"] = num_json(tr.theta_land);
  j["subsurface"] = tr.subsurface;
  j["final_velocity"] = vec_json(tr.final_state.v);
  j["flags"] = {{"converged", res.converged},
                {"above_surface", !tr.subsurface},
                {"within_cones", cone_ok},
                {"below_escape_speed", below_escape}};
  j["feasible"] = clean;
  write_json(out / "result.json", j);
  if (!clean) {
    return fail(ErrorKind::Numerical, res.converged ? "InfeasibleHop" : "Unconverged",
                "hop solved with flags not clean; see result.json");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// plan

Json plan_json(const HopPlan& p) {
  Json j;
  Json pos = Json::array();
  for (const auto& q : p.positions) pos.push_back(surface_json(q));
  j["positions"] = std::move(pos);
  j["times"] = p.times;
  j["speeds"] = p.speeds;
  Json hops = Json::array();
  for (const auto& h : p.hops) {
    hops.push_back({{"v0", vec_json(h.v0)},
                    {"speed", h.speed},
                    {"escape_speed", num_json(h.escape_speed)},
                    {"theta_launch", num_json(h.theta_launch)},
                    {"theta_land", num_json(h.theta_land)},
                    {"final_error", num_json(h.final_error)},
                    {"iterations", h.iterations},
                    {"converged", h.converged},
                    {"subsurface", h.subsurface},
                    {"failure", h.failure}});
  }
  j["hops"] = std::move(hops);
  j["f"] = p.f;
  j["J"] = num_json(p.J);
  j["feasible"] = p.feasible();
  return j;
}

int cmd_plan(const Scenario& sc, const fs::path& out, unsigned threads) {
  if (!sc.plan.start || !sc.plan.goal) throw ConfigError("plan: endpoints missing (scenario.planner.start/goal)");
  const auto env = build_env(sc, true);
  PlannerConfig cfg = sc.plan.config;
  cfg.threads = threads;
  cfg.validate();

  std::vector<SurfacePoint> pts{on_surface(*env.shape, *sc.plan.start)};
  for (const auto& w : sc.plan.waypoints) pts.push_back(on_surface(*env.shape, w));
  pts.push_back(on_surface(*env.shape, *sc.plan.goal));

  Rng rng(sc.seed);
  std::vector<OptimizeResult> segments;
  HopPlan plan;
  if (pts.size() == 2) {
    segments.push_back(optimize(env, pts[0], pts[1], cfg, rng));
    plan = segments.front().best;
  } else {
    auto res = plan_with_waypoints(env, pts, cfg, rng);
    plan = std::move(res.plan);
    segments = std::move(res.segments);
  }

  CsvWriter gen(out / "generations.csv", "segment,generation,best_J,mean_J,std_J,best_f,feasible,evaluated,pruned");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (const auto& g : segments[s].history) {
      gen.row(s, g.generation, g.best_J, g.mean_J, g.std_J, g.best_f, g.feasible, g.evaluated, g.pruned);
    }
  }
  CsvWriter hops(out / "hops.csv",
                 "hop,x0,y0,z0,x1,y1,z1,tau,vx,vy,vz,speed,escape_speed,theta_launch,theta_land,final_error,"
                 "iterations,converged,subsurface");
  for (std::size_t k = 0; k < plan.hops.size(); ++k) {
    const auto& h = plan.hops[k];
    hops.row(k, plan.positions[k].position, plan.positions[k + 1].position, plan.times[k], h.v0, h.speed,
             h.escape_speed, h.theta_launch, h.theta_land, h.final_error, h.iterations, h.converged, h.subsurface);
    // Trajectory at the evaluation step (reproduces the stored v0).
    ShootingConfig shoot = hop_shooting_config(cfg, plan.times[k]);
    shoot.record_samples = true;
    try {
      const auto res = solve_hop(env, plan.positions[k], plan.positions[k + 1], plan.times[k], shoot);
      write_trajectory(out / fmt::format("hop_{:03d}.csv", k), res.trajectory);
    } catch (const NumericalError& e) {
      spdlog::warn("hop {}: no trajectory ({})", k, e.what());
    }
  }

  Json j = header("plan", sc);
  j["body"] = body_json(env);
  j["plan"] = plan_json(plan);
  Json segs = Json::array();
  for (const auto& s : segments) {
    segs.push_back({{"evaluations", s.evaluations},
                    {"generations", s.history.size()},
                    {"best", plan_json(s.best)}});
  }
  j["segments"] = std::move(segs);
  write_json(out / "plan.json", j);
  if (!plan.feasible()) return fail(ErrorKind::Numerical, "InfeasiblePlan", "best plan violates constraints");
  return 0;
}

// ---------------------------------------------------------------------------
// swarm

int cmd_swarm(const Scenario& sc, const fs::path& out, unsigned threads) {
  const auto env = build_env(sc, sc.swarm.mode == StepMode::Ballistic);
  SwarmConfig cfg = sc.swarm.config;
  cfg.threads = threads;
  std::optional<std::vector<SurfacePoint>> explicit_positions;
  if (!sc.swarm.positions.empty()) {
    explicit_positions.emplace();
    for (const auto& p : sc.swarm.positions) explicit_positions->push_back(on_surface(*env.shape, p));
  }
  Rng rng(sc.seed);
  const auto run = simulate(env, cfg, sc.swarm.mode, rng, explicit_positions);

  CsvWriter pos(out / "positions.csv", "iter,rover,x,y,z,degree");
  CsvWriter links(out / "links.csv", "iter,i,j");
  for (std::size_t it = 0; it < run.history.size(); ++it) {
    const auto& s = run.history[it];
    for (std::size_t i = 0; i < s.size(); ++i) {
      pos.row(it, i, s.positions[i].position, s.degrees[i]);
      for (std::size_t k = i + 1; k < s.size(); ++k) {
        if (s.linked(i, k)) links.row(it, i, k);
      }
    }
  }
  CsvWriter metrics(out / "metrics.csv", "iter,min_distance,mean_distance,min_degree,components,coverage,degraded");
  for (const auto& m : run.metrics) {
    metrics.row(m.iteration, m.min_distance, m.mean_distance, m.min_degree, m.components, m.coverage, m.degraded);
  }
  Json j = header("swarm", sc);
  j["body"] = body_json(env);
  const auto& last = run.metrics.back();
  j["final"] = {{"iteration", last.iteration},   {"min_distance", last.min_distance},
                {"mean_distance", last.mean_distance}, {"min_degree", last.min_degree},
                {"components", last.components}, {"coverage", last.coverage},
                {"degraded", last.degraded}};
  int worst = std::numeric_limits<int>::max();
  for (std::size_t k = 1; k < run.metrics.size(); ++k) worst = std::min(worst, run.metrics[k].min_degree);
  j["min_degree_after_first_step"] = run.metrics.size() > 1 ? Json(worst) : Json(nullptr);
  write_json(out / "summary.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// localize

struct TruthRow {
  double t = 0.0;
  Vec3 r = Vec3::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
};

std::vector<TruthRow> read_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open truth trajectory " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("truth trajectory " + path.string() + " is empty");
  std::vector<std::string> cols;
  {
    std::stringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  auto col = [&](const char* name) -> int {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int it = col("t"), ix = col("x"), iy = col("y"), iz = col("z");
  if (it < 0 || ix < 0 || iy < 0 || iz < 0) throw ConfigError("truth trajectory needs columns t,x,y,z");
  const int iqw = col("qw"), iqx = col("qx"), iqy = col("qy"), iqz = col("qz");
  const bool has_q = iqw >= 0 && iqx >= 0 && iqy >= 0 && iqz >= 0;

  std::vector<TruthRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      try {
        v.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("truth trajectory line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (v.size() != cols.size()) {
      throw ConfigError("truth trajectory line " + std::to_string(line_no) + ": wrong column count");
    }
    TruthRow r;
    r.t = v[static_cast<std::size_t>(it)];
    r.r = Vec3(v[static_cast<std::size_t>(ix)], v[static_cast<std::size_t>(iy)], v[static_cast<std::size_t>(iz)]);
    if (has_q) {
      r.q = Eigen::Quaterniond(v[static_cast<std::size_t>(iqw)], v[static_cast<std::size_t>(iqx)],
                               v[static_cast<std::size_t>(iqy)], v[static_cast<std::size_t>(iqz)]);
      if (!(r.q.norm() > 0.0)) throw ConfigError("truth trajectory line " + std::to_string(line_no) + ": zero quaternion");
      r.q.normalize();
    }
    if (!rows.empty() && !(r.t > rows.back().t)) {
      throw ConfigError("truth trajectory times must increase (line " + std::to_string(line_no) + ")");
    }
    rows.push_back(r);
  }
  if (rows.size() < 2) throw ConfigError("truth trajectory needs at least 2 rows");
  return rows;
}

// Linear position and spherical-linear attitude interpolation.
RigidTransform truth_at(const std::vector<TruthRow>& rows, double t) {
  auto hi = std::upper_bound(rows.begin(), rows.end(), t, [](double x, const TruthRow& r) { return x < r.t; });
  if (hi == rows.begin()) return RigidTransform::from_quaternion(rows.front().q, rows.front().r);
  if (hi == rows.end()) return RigidTransform::from_quaternion(rows.back().q, rows.back().r);
  const auto& a = *(hi - 1);
  const auto& b = *hi;
  const double s = (t - a.t) / (b.t - a.t);
  return RigidTransform::from_quaternion(a.q.slerp(s, b.q), a.r + s * (b.r - a.r));
}

int cmd_localize(const Scenario& sc, const fs::path& out, unsigned threads) {
  if (sc.localize.truth.empty()) throw ConfigError("localize: no truth trajectory (scenario.localize.truth or --truth)");
  const auto rows = read_truth(resolve(sc, sc.localize.truth));
  const auto env = build_env(sc, false);
  const ScanConfig& scan = sc.localize.scan;
  scan.validate();
  IcpOptions icp_opts = sc.localize.icp;
  icp_opts.threads = threads;
  icp_opts.validate();

  const double period = 1.0 / scan.frequency;
  const double t0 = rows.front().t;
  const double t1 = rows.back().t;
  std::vector<double> times;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * period;
    if (t > t1 + 1e-9 * std::max(1.0, std::abs(t1))) break;
    times.push_back(t);
  }
  if (times.size() < 2) throw ConfigError("localize: trajectory shorter than one scan period");

  std::vector<RigidTransform> truth;
  for (double t : times) {
    auto pose = truth_at(rows, t);
    if (sc.localize.mast_height != 0.0 && pose.t.norm() > 0.0) pose.t += sc.localize.mast_height * pose.t.normalized();
    truth.push_back(pose);
  }
  Rng rng(sc.seed);
  std::vector<PointCloud> scans;
  std::size_t points = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    scans.push_back(simulate_scan(*env.shape, truth[k], scan, rng, threads));
    scans.back().time = times[k];
    points += scans.back().points.size();
    spdlog::debug("scan {} at t={}: {} points", k, times[k], scans.back().points.size());
  }
  const auto est = chain_poses(scans, truth.front(), icp_opts);

  CsvWriter csv(out / "poses.csv",
                "scan,t,x_true,y_true,z_true,x_est,y_est,z_est,qw_est,qx_est,qy_est,qz_est,position_error,"
                "rotation_error_deg");
  double path = 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (k > 0) path += (truth[k].t - truth[k - 1].t).norm();
    const double err = (est[k].t - truth[k].t).norm();
    worst = std::max(worst, err);
    const auto q = est[k].quaternion();
    csv.row(k, times[k], truth[k].t, est[k].t, q.w(), q.x(), q.y(), q.z(), err,
            rotation_difference(est[k], truth[k]) * kDegPerRad);
  }
  const double terminal = (est.back().t - truth.back().t).norm();
  Json j = header("localize", sc);
  j["scans"] = scans.size();
  j["mean_points_per_scan"] = static_cast<double>(points) / static_cast<double>(scans.size());
  j["path_length"] = path;
  j["terminal_error"] = terminal;
  j["drift_ratio"] = path > 0.0 ? Json(terminal / path) : Json(nullptr);
  j["max_error"] = worst;
  j["terminal_rotation_error_deg"] = rotation_difference(est.back(), truth.back()) * kDegPerRad;
  write_json(out / "report.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Ballistic hopping toolkit for small-body rovers"};
  app.require_subcommand(1);
  CommonArgs common;
  ExtraArgs extra;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "Scenario JSON file")->required();
    sub->add_option("--seed", common.seed, "RNG seed (overrides scenario.seed)");
    sub->add_option("--out", common.out, "Output directory (overrides scenario.output_dir)");
    sub->add_option("--threads", common.threads, "Worker threads (default: all cores)");
  };
  auto* gravity = app.add_subcommand("gravity", "Evaluate the gravity field at points or on a grid");
  add_common(gravity);
  gravity->add_option("--point", extra.points, "Extra field point x,y,z (repeatable)");
  auto* hop = app.add_subcommand("hop", "Solve one hop between two surface points");
  add_common(hop);
  hop->add_option("--from", extra.from, "Launch point x,y,z (projected to the surface)");
  hop->add_option("--to", extra.to, "Target point x,y,z (projected to the surface)");
  hop->add_option("--tau", extra.tau, "Transfer time, s");
  auto* plan = app.add_subcommand("plan", "Optimize a multi-hop route");
  add_common(plan);
  plan->add_option("--start", extra.start, "Start point x,y,z");
  plan->add_option("--goal", extra.goal, "Goal point x,y,z");
  plan->add_option("--waypoint", extra.waypoints, "Intermediate waypoint x,y,z (repeatable, in order)");
  auto* swarm = app.add_subcommand("swarm", "Simulate virtual-force swarm spreading");
  add_common(swarm);
  auto* localize = app.add_subcommand("localize", "Dead-reckon a trajectory from simulated scans");
  add_common(localize);
  localize->add_option("--truth", extra.truth, "Truth pose CSV (t,x,y,z[,qw,qx,qy,qz])");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorKind::Config, "UsageError", e.what());
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    auto given = [&](const char* name) {
      const CLI::Option* o = cmd->get_option_no_throw(name);
      return o && o->count() > 0;
    };
    Scenario sc = load_scenario(common.scenario);
    if (given("--seed")) sc.seed = common.seed;
    if (given("--out")) sc.output_dir = common.out;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    if (given("--threads")) {
      if (common.threads < 1) throw ConfigError("--threads must be >= 1");
      threads = common.threads;
    }
    for (const auto& p : extra.points) sc.gravity.points.push_back(parse_vec3(p, "--point"));
    if (!extra.from.empty()) sc.hop.from = parse_vec3(extra.from, "--from");
    if (!extra.to.empty()) sc.hop.to = parse_vec3(extra.to, "--to");
    if (given("--tau")) sc.hop.tau = extra.tau;
    if (!extra.start.empty()) sc.plan.start = parse_vec3(extra.start, "--start");
    if (!extra.goal.empty()) sc.plan.goal = parse_vec3(extra.goal, "--goal");
    if (!extra.waypoints.empty()) {
      sc.plan.waypoints.clear();
      for (const auto& w : extra.waypoints) sc.plan.waypoints.push_back(parse_vec3(w, "--waypoint"));
    }
    if (!extra.truth.empty()) sc.localize.truth = fs::absolute(extra.truth).string();

    const fs::path out(sc.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
    spdlog::info("seed {}, {} thread(s), output {}", sc.seed, threads, out.string());

    if (gravity->parsed()) return cmd_gravity(sc, out, threads);
    if (hop->parsed()) return cmd_hop(sc, out);
    if (plan->parsed()) return cmd_plan(sc, out, threads);
    if (swarm->parsed()) return cmd_swarm(sc, out, threads);
    return cmd_localize(sc, out, threads);
  } catch (const Error& e) {
    return fail(e.kind(), e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorKind::Numerical, "InternalError", e.what());
  }
}

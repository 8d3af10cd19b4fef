#pragma once

// Scenario files: strict JSON parsing (unknown keys are errors) and the
// resolved form embedded in every output.

#include "asterhop/asterhop.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace asterhop::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "asterhop.scenario/1";

struct ShapeSpec {
  std::string kind = "icosphere";  // obj | icosphere | ellipsoid | box | lumpy_ellipsoid | rough_site
  std::string path;                // obj only; resolved against the scenario directory
  double radius = 100.0;
  int subdivisions = 3;
  Vec3 semi_axes = Vec3(275.0, 150.0, 125.0);
  Vec3 size = Vec3::Constant(100.0);
  double relief = 0.1;
  std::uint64_t seed = 1;
  // rough_site: refined, roughened patch around a surface direction
  Vec3 site = Vec3::UnitX();
  double site_angle = 0.1;  // rad
  int levels = 3;
  double roughness = 0.5;   // m
  std::uint64_t roughness_seed = 1;
  double scale = 1.0;
  bool recenter = false;
};

struct GridSpec {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  std::array<int, 3> counts{1, 1, 1};
};

struct GravitySpec {
  std::vector<Vec3> points;
  std::optional<GridSpec> grid;
};

struct HopSpec {
  std::optional<Vec3> from;
  std::optional<Vec3> to;
  double tau = 1800.0;
};

struct PlanSpec {
  PlannerConfig config;
  std::optional<Vec3> start;
  std::optional<Vec3> goal;
  std::vector<Vec3> waypoints;  // visited in order between start and goal
};

struct SwarmSpec {
  SwarmConfig config;
  StepMode mode = StepMode::Kinematic;
  std::vector<Vec3> positions;  // explicit placement; empty = seeded random
};

struct LocalizeSpec {
  std::string truth;           // pose CSV; resolved against the scenario directory
  double mast_height = 0.0;    // m, radial sensor offset added to every truth position
  ScanConfig scan;
  IcpOptions icp;
};

struct Scenario {
  std::string schema = kSchema;
  std::uint64_t seed = 0;
  std::string output_dir = "asterhop-out";
  ShapeSpec shape;
  std::optional<double> density;
  Vec3 omega = Vec3::Zero();
  std::optional<double> gravitational_constant;
  ShootingConfig shooting;
  GravitySpec gravity;
  HopSpec hop;
  PlanSpec plan;
  SwarmSpec swarm;
  LocalizeSpec localize;
  std::filesystem::path base_dir;  // directory of the scenario file
};

// ---------------------------------------------------------------------------
// Field visitors shared by the reader and the writer.

template <class V>
void fields(V& v, ShootingConfig& c) {
  v("tol", c.tol);
  v("max_iter", c.max_iter);
  v("fd_step", c.fd_step);
  v("damping", c.damping);
  v("stm", c.stm);
  v("dt", c.dt);
  v("nudge", c.nudge);
  v("max_condition", c.max_condition);
}

template <class V>
void fields(V& v, PlannerConfig& c) {
  v("iterations", c.iterations);
  v("max_hop", c.max_hop);
  v("min_hop", c.min_hop);
  v("tau_mean", c.tau_mean);
  v("tau_sigma", c.tau_sigma);
  v("goal_tolerance", c.goal_tolerance);
  v("population", c.population);
  v("generations", c.generations);
  v("sigma_time", c.sigma_time);
  v("sigma_position", c.sigma_position);
  v("penalty_weight", c.penalty_weight);
  v("infeasible_penalty", c.infeasible_penalty);
  v("cone_limit", c.cone_limit);
  v("sample_attempts", c.sample_attempts);
  v("steps_per_hop", c.steps_per_hop);
  v.object("shooting", c.shooting);
}

template <class V>
void fields(V& v, SwarmConfig& c) {
  v("count", c.count);
  v("comm_range", c.comm_range);
  v("sensing_range", c.sensing_range);
  v("min_degree", c.min_degree);
  v("gain", c.gain);
  v("max_hop", c.max_hop);
  v("iterations", c.iterations);
  v("hop_time", c.hop_time);
  v("deploy_center", c.deploy_center);
  v("deploy_radius", c.deploy_radius);
  v("coverage_samples", c.coverage_samples);
}

template <class V>
void fields(V& v, ScanConfig& c) {
  v("azimuth", c.azimuth);
  v("elevation", c.elevation);
  v("max_range", c.max_range);
  v("noise", c.noise);
  v("frequency", c.frequency);
  v("jitter", c.jitter);
}

template <class V>
void fields(V& v, IcpOptions& c) {
  v("max_iter", c.max_iter);
  v("tol", c.tol);
  // null = unlimited
  std::optional<double> cut;
  if (std::isfinite(c.max_correspondence)) cut = c.max_correspondence;
  v("max_correspondence", cut);
  c.max_correspondence = cut.value_or(std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------
// Reader

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json* take(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    return &*it;
  }

  std::string at(const char* key) const { return path_ + "." + key; }

  template <class T>
  void operator()(const char* key, T& out) {
    if (const Json* j = take(key)) read(*j, at(key), out);
  }

  template <class T>
  void object(const char* key, T& out) {
    if (const Json* j = take(key)) {
      Reader sub(*j, at(key));
      fields(sub, out);
      sub.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(at(it.key().c_str()), "unknown key");
    }
  }

  static void read(const Json& j, const std::string& where, double& out) {
    if (!j.is_number()) fail(where, "expected a number");
    out = j.get<double>();
    if (!std::isfinite(out)) fail(where, "expected a finite number");
  }
  static void read(const Json& j, const std::string& where, int& out) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(where, "out of range");
    out = static_cast<int>(v);
  }
  static void read(const Json& j, const std::string& where, std::uint64_t& out) {
    if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
    out = j.get<std::uint64_t>();
  }
  static void read(const Json& j, const std::string& where, bool& out) {
    if (!j.is_boolean()) fail(where, "expected true or false");
    out = j.get<bool>();
  }
  static void read(const Json& j, const std::string& where, std::string& out) {
    if (!j.is_string()) fail(where, "expected a string");
    out = j.get<std::string>();
  }
  static void read(const Json& j, const std::string& where, Vec3& out) {
    if (!j.is_array() || j.size() != 3) fail(where, "expected [x, y, z]");
    for (int i = 0; i < 3; ++i) read(j[static_cast<std::size_t>(i)], where, out[i]);
  }
  static void read(const Json& j, const std::string& where, std::array<int, 3>& out) {
    if (!j.is_array() || j.size() != 3) fail(where, "expected [nx, ny, nz]");
    for (std::size_t i = 0; i < 3; ++i) read(j[i], where, out[i]);
  }
  static void read(const Json& j, const std::string& where, std::vector<Vec3>& out) {
    if (!j.is_array()) fail(where, "expected a list of [x, y, z]");
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      Vec3 p;
      read(j[i], where + "[" + std::to_string(i) + "]", p);
      out.push_back(p);
    }
  }
  static void read(const Json& j, const std::string& where, StmMethod& out) {
    std::string s;
    read(j, where, s);
    if (s == "variational") {
      out = StmMethod::Variational;
    } else if (s == "central_difference") {
      out = StmMethod::CentralDifference;
    } else {
      fail(where, "expected \"variational\" or \"central_difference\"");
    }
  }
  static void read(const Json& j, const std::string& where, StepMode& out) {
    std::string s;
    read(j, where, s);
    if (s == "kinematic") {
      out = StepMode::Kinematic;
    } else if (s == "ballistic") {
      out = StepMode::Ballistic;
    } else {
      fail(where, "expected \"kinematic\" or \"ballistic\"");
    }
  }
  template <class T>
  static void read(const Json& j, const std::string& where, std::optional<T>& out) {
    if (j.is_null()) {
      out.reset();
      return;
    }
    T v{};
    read(j, where, v);
    out = v;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Writer

struct Writer {
  Json j = Json::object();

  template <class T>
  void operator()(const char* key, const T& v) {
    j[key] = value(v);
  }

  template <class T>
  void object(const char* key, T& v) {
    Writer sub;
    fields(sub, v);
    j[key] = std::move(sub.j);
  }

  static Json value(double v) { return v; }
  static Json value(int v) { return v; }
  static Json value(std::uint64_t v) { return v; }
  static Json value(bool v) { return v; }
  static Json value(const std::string& v) { return v; }
  static Json value(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
  static Json value(const std::array<int, 3>& v) { return Json::array({v[0], v[1], v[2]}); }
  static Json value(const std::vector<Vec3>& v) {
    Json a = Json::array();
    for (const auto& p : v) a.push_back(value(p));
    return a;
  }
  static Json value(StmMethod m) { return m == StmMethod::Variational ? "variational" : "central_difference"; }
  static Json value(StepMode m) { return m == StepMode::Kinematic ? "kinematic" : "ballistic"; }
  template <class T>
  static Json value(const std::optional<T>& v) {
    return v ? value(*v) : Json(nullptr);
  }
};

template <class T>
Json to_json(T cfg) {
  Writer w;
  fields(w, cfg);
  return std::move(w.j);
}

// ---------------------------------------------------------------------------
// Scenario

inline ShapeSpec read_shape(const Json& j, const std::string& where) {
  Reader r(j, where);
  ShapeSpec s;
  r("kind", s.kind);
  if (!r.has("kind")) Reader::fail(where, "missing \"kind\"");
  r("scale", s.scale);
  r("recenter", s.recenter);
  if (s.kind == "obj") {
    r("path", s.path);
    if (s.path.empty()) Reader::fail(where, "obj shape needs \"path\"");
  } else if (s.kind == "icosphere") {
    r("radius", s.radius);
    r("subdivisions", s.subdivisions);
  } else if (s.kind == "ellipsoid") {
    r("semi_axes", s.semi_axes);
    r("subdivisions", s.subdivisions);
  } else if (s.kind == "box") {
    r("size", s.size);
  } else if (s.kind == "lumpy_ellipsoid") {
    r("semi_axes", s.semi_axes);
    r("subdivisions", s.subdivisions);
    r("relief", s.relief);
    r("seed", s.seed);
  } else if (s.kind == "rough_site") {
    r("semi_axes", s.semi_axes);
    r("subdivisions", s.subdivisions);
    r("relief", s.relief);
    r("seed", s.seed);
    r("site", s.site);
    r("site_angle", s.site_angle);
    r("levels", s.levels);
    r("roughness", s.roughness);
    r("roughness_seed", s.roughness_seed);
    if (s.levels < 0 || s.levels > 8) Reader::fail(r.at("levels"), "must be in [0, 8]");
    if (!(s.site.norm() > 0.0)) Reader::fail(r.at("site"), "must be a nonzero direction");
    if (!(s.site_angle > 0.0 && s.site_angle < kPi)) Reader::fail(r.at("site_angle"), "must be in (0, pi)");
  } else {
    Reader::fail(r.at("kind"), "unknown shape kind \"" + s.kind + "\"");
  }
  r.finish();
  if (!(s.scale > 0.0)) Reader::fail(r.at("scale"), "must be positive");
  if (s.kind != "obj" && s.kind != "box" && (s.subdivisions < 0 || s.subdivisions > 7)) {
    Reader::fail(r.at("subdivisions"), "must be in [0, 7]");
  }
  return s;
}

inline Json shape_json(const ShapeSpec& s) {
  Json j;
  j["kind"] = s.kind;
  if (s.kind == "obj") j["path"] = s.path;
  if (s.kind == "icosphere") {
    j["radius"] = s.radius;
    j["subdivisions"] = s.subdivisions;
  }
  if (s.kind == "ellipsoid" || s.kind == "lumpy_ellipsoid" || s.kind == "rough_site") {
    j["semi_axes"] = Writer::value(s.semi_axes);
    j["subdivisions"] = s.subdivisions;
  }
  if (s.kind == "lumpy_ellipsoid" || s.kind == "rough_site") {
    j["relief"] = s.relief;
    j["seed"] = s.seed;
  }
  if (s.kind == "rough_site") {
    j["site"] = Writer::value(s.site);
    j["site_angle"] = s.site_angle;
    j["levels"] = s.levels;
    j["roughness"] = s.roughness;
    j["roughness_seed"] = s.roughness_seed;
  }
  if (s.kind == "box") j["size"] = Writer::value(s.size);
  j["scale"] = s.scale;
  j["recenter"] = s.recenter;
  return j;
}

inline Scenario parse_scenario(const Json& doc, const std::filesystem::path& base_dir) {
  Reader r(doc, "scenario");
  Scenario s;
  s.base_dir = base_dir;
  r("schema", s.schema);
  if (!r.has("schema")) Reader::fail("scenario", "missing \"schema\"");
  if (s.schema != kSchema) Reader::fail(r.at("schema"), "unsupported schema \"" + s.schema + "\", expected \"" + kSchema + "\"");
  r("seed", s.seed);
  r("output_dir", s.output_dir);
  if (const Json* j = r.take("shape")) {
    s.shape = read_shape(*j, r.at("shape"));
  } else {
    Reader::fail("scenario", "missing \"shape\"");
  }
  r("density", s.density);
  r("omega", s.omega);
  r("gravitational_constant", s.gravitational_constant);
  r.object("shooting", s.shooting);

  if (const Json* j = r.take("gravity")) {
    Reader g(*j, r.at("gravity"));
    g("points", s.gravity.points);
    if (const Json* gj = g.take("grid")) {
      Reader gr(*gj, g.at("grid"));
      GridSpec grid;
      gr("min", grid.min);
      gr("max", grid.max);
      gr("counts", grid.counts);
      gr.finish();
      for (int c : grid.counts) {
        if (c < 1) Reader::fail(gr.at("counts"), "counts must be >= 1");
      }
      s.gravity.grid = grid;
    }
    g.finish();
  }
  if (const Json* j = r.take("hop")) {
    Reader h(*j, r.at("hop"));
    h("from", s.hop.from);
    h("to", s.hop.to);
    h("tau", s.hop.tau);
    h.finish();
  }
  if (const Json* j = r.take("planner")) {
    Reader p(*j, r.at("planner"));
    fields(p, s.plan.config);
    p("start", s.plan.start);
    p("goal", s.plan.goal);
    p("waypoints", s.plan.waypoints);
    p.finish();
  }
  if (const Json* j = r.take("swarm")) {
    Reader w(*j, r.at("swarm"));
    fields(w, s.swarm.config);
    w("mode", s.swarm.mode);
    w("positions", s.swarm.positions);
    w.finish();
  }
  if (const Json* j = r.take("localize")) {
    Reader l(*j, r.at("localize"));
    l("truth", s.localize.truth);
    l("mast_height", s.localize.mast_height);
    l.object("scan", s.localize.scan);
    l.object("icp", s.localize.icp);
    l.finish();
  }
  r.finish();

  if (s.density && !(*s.density > 0.0)) Reader::fail(r.at("density"), "must be positive");
  if (s.gravitational_constant && !(*s.gravitational_constant > 0.0)) {
    Reader::fail(r.at("gravitational_constant"), "must be positive");
  }
  s.shooting.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open scenario file " + file.string());
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, /*ignore_comments=*/false);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario " + file.string() + ": " + e.what());
  }
  return parse_scenario(doc, file.has_parent_path() ? file.parent_path() : std::filesystem::path("."));
}

inline std::filesystem::path resolve(const Scenario& s, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (s.base_dir / path).lexically_normal();
}

// Resolved scenario as embedded in outputs. Derived defaults are filled in;
// null optionals mean "chosen per hop" (shooting dt and fd_step). The output
// directory and thread count are run plumbing and are left out.
inline Json resolved_json(const Scenario& s) {
  Json j;
  j["schema"] = s.schema;
  j["seed"] = s.seed;
  ShapeSpec shape = s.shape;
  if (shape.kind == "obj") shape.path = std::filesystem::absolute(resolve(s, shape.path)).lexically_normal().string();
  j["shape"] = shape_json(shape);
  j["density"] = Writer::value(s.density);
  j["omega"] = Writer::value(s.omega);
  j["gravitational_constant"] = s.gravitational_constant.value_or(GravityField::kDefaultG);
  j["shooting"] = to_json(s.shooting);

  Json grav;
  grav["points"] = Writer::value(s.gravity.points);
  if (s.gravity.grid) {
    grav["grid"] = {{"min", Writer::value(s.gravity.grid->min)},
                    {"max", Writer::value(s.gravity.grid->max)},
                    {"counts", Writer::value(s.gravity.grid->counts)}};
  }
  j["gravity"] = std::move(grav);

  j["hop"] = {{"from", Writer::value(s.hop.from)}, {"to", Writer::value(s.hop.to)}, {"tau", s.hop.tau}};

  PlannerConfig pc = s.plan.config;
  if (pc.max_hop > 0.0 && pc.tau_mean > 0.0) {
    pc.min_hop = pc.resolved_min_hop();
    pc.tau_sigma = pc.resolved_tau_sigma();
    pc.goal_tolerance = pc.resolved_goal_tolerance();
    pc.sigma_time = pc.resolved_sigma_time();
    pc.sigma_position = pc.resolved_sigma_position();
  }
  Json plan = to_json(pc);
  plan["start"] = Writer::value(s.plan.start);
  plan["goal"] = Writer::value(s.plan.goal);
  plan["waypoints"] = Writer::value(s.plan.waypoints);
  j["planner"] = std::move(plan);

  SwarmConfig sc = s.swarm.config;
  sc.sensing_range = sc.resolved_sensing_range();
  sc.gain = sc.resolved_gain();
  sc.deploy_radius = sc.resolved_deploy_radius();
  Json swarm = to_json(sc);
  swarm["mode"] = Writer::value(s.swarm.mode);
  swarm["positions"] = Writer::value(s.swarm.positions);
  j["swarm"] = std::move(swarm);

  Json loc;
  loc["truth"] = s.localize.truth.empty()
                     ? Json("")
                     : Json(std::filesystem::absolute(resolve(s, s.localize.truth)).lexically_normal().string());
  loc["mast_height"] = s.localize.mast_height;
  loc["scan"] = to_json(s.localize.scan);
  loc["icp"] = to_json(s.localize.icp);
  j["localize"] = std::move(loc);
  return j;
}

}  // namespace asterhop::cli

#pragma once

#include "asterhop/bvh.hpp"
#include "asterhop/common.hpp"
#include "asterhop/geometry.hpp"
#include "asterhop/random.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace asterhop {

// Uniform point in a triangle, as barycentric weights.
inline std::array<double, 3> sample_barycentric(Rng& rng) {
  const double s = std::sqrt(rng.uniform());
  const double r = rng.uniform();
  return {1.0 - s, s * (1.0 - r), s * r};
}

// Edge with canonical vertex order (v[0] < v[1]). faces[0] is the facet whose
// winding traverses v[0] -> v[1]; faces[1] traverses v[1] -> v[0].
struct Edge {
  std::array<std::uint32_t, 2> v{};
  std::array<std::uint32_t, 2> faces{};
};

struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  std::uint32_t facet = 0;
  std::array<double, 3> bary{1.0, 0.0, 0.0};
};

enum class Containment { Inside, Outside, OnSurface };

inline const char* to_string(Containment c) {
  switch (c) {
    case Containment::Inside: return "Inside";
    case Containment::Outside: return "Outside";
    case Containment::OnSurface: return "OnSurface";
  }
  return "?";
}

struct MeshDiagnostics {
  std::size_t ignored_records = 0;
  int euler_characteristic = 2;
  double com_offset = 0.0;             // |center of mass|, m
  bool com_offset_warning = false;     // offset > 1% of bounding radius
  bool recentered = false;
};

// Closed, consistently wound triangle mesh in the body-fixed frame. Immutable
// after construction; all queries are const and safe to call concurrently.
class ShapeModel {
 public:
  static constexpr double kMinFacetArea = 1e-12;  // m^2
  static constexpr double kComWarnFraction = 0.01;

  ShapeModel(std::vector<Vec3> vertices, std::vector<Triangle> facets, bool recenter = false,
             std::size_t ignored_records = 0)
      : vertices_(std::move(vertices)), facets_(std::move(facets)) {
    diagnostics_.ignored_records = ignored_records;
    if (vertices_.empty() || facets_.empty()) throw MeshError("EmptyMesh", "mesh has no vertices or facets");
    for (const auto& f : facets_) {
      for (auto idx : f) {
        if (idx >= vertices_.size()) throw MeshError("MalformedRecord", "facet references missing vertex");
      }
      if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
        throw MeshError("DegenerateFacet", "facet repeats a vertex index");
      }
    }
    for (const auto& v : vertices_) {
      if (!v.allFinite()) throw MeshError("MalformedRecord", "non-finite vertex coordinate");
    }
    build_edges();
    compute_mass_properties();
    if (recenter && com_.norm() > 0.0) {
      for (auto& v : vertices_) v -= com_;
      diagnostics_.recentered = true;
      compute_mass_properties();
    }
    bvh_ = TriangleBvh(vertices_, facets_);
    area_cdf_.resize(facets_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < facets_.size(); ++i) {
      acc += areas_[i];
      area_cdf_[i] = acc;
    }
  }

  std::span<const Vec3> vertices() const { return vertices_; }
  std::span<const Triangle> facets() const { return facets_; }
  std::span<const Vec3> normals() const { return normals_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const double> areas() const { return areas_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t facet_count() const { return facets_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  double volume() const { return volume_; }
  double surface_area() const { return area_cdf_.back(); }
  const Vec3& center_of_mass() const { return com_; }
  double bounding_radius() const { return bounding_radius_; }
  const MeshDiagnostics& diagnostics() const { return diagnostics_; }
  int euler_characteristic() const { return diagnostics_.euler_characteristic; }

  std::array<Vec3, 3> corners(std::uint32_t facet) const {
    const auto& f = facets_[facet];
    return {vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]};
  }

  Vec3 centroid(std::uint32_t facet) const {
    const auto c = corners(facet);
    return (c[0] + c[1] + c[2]) / 3.0;
  }

  SurfacePoint surface_point(std::uint32_t facet, const std::array<double, 3>& bary) const {
    const auto c = corners(facet);
    return {bary[0] * c[0] + bary[1] * c[1] + bary[2] * c[2], facet, bary};
  }

  // Winding number of the closed surface around p (1 inside, 0 outside).
  double winding_number(const Vec3& p) const {
    double total = 0.0;
    for (std::uint32_t i = 0; i < facets_.size(); ++i) {
      const auto c = corners(i);
      total += geometry::solid_angle(p, c[0], c[1], c[2]);
    }
    return total / (4.0 * kPi);
  }

  double distance(const Vec3& p) const { return std::sqrt(bvh_.closest(p).squared_distance); }

  // Default surface tolerance: 1e-6 of the bounding radius.
  double default_surface_tolerance() const { return 1e-6 * bounding_radius_; }

  Containment contains(const Vec3& p, std::optional<double> tol = std::nullopt) const {
    const double t = tol.value_or(default_surface_tolerance());
    if (distance(p) < t) return Containment::OnSurface;
    return winding_number(p) > 0.5 ? Containment::Inside : Containment::Outside;
  }

  // Area-weighted facet choice, then uniform barycentric sampling in the facet.
  SurfacePoint sample_surface(Rng& rng) const {
    const double target = rng.uniform() * area_cdf_.back();
    auto it = std::upper_bound(area_cdf_.begin(), area_cdf_.end(), target);
    if (it == area_cdf_.end()) --it;
    const auto facet = static_cast<std::uint32_t>(it - area_cdf_.begin());
    return surface_point(facet, sample_barycentric(rng));
  }

  SurfacePoint project_to_surface(const Vec3& p) const {
    const auto hit = bvh_.closest(p);
    return {hit.point, hit.facet, hit.bary};
  }

  // Surface point reached by moving from `from` along `disp`, shortened so
  // the straight-line distance after projection never exceeds `max_len`.
  SurfacePoint step_toward(const SurfacePoint& from, Vec3 disp, double max_len) const {
    const double len = disp.norm();
    if (len == 0.0) return from;
    if (len > max_len) disp *= max_len / len;
    SurfacePoint to = project_to_surface(from.position + disp);
    if ((to.position - from.position).norm() <= max_len) return to;
    double lo = 0.0;
    double hi = 1.0;
    SurfacePoint best = from;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      const SurfacePoint p = project_to_surface(from.position + mid * disp);
      if ((p.position - from.position).norm() <= max_len) {
        lo = mid;
        best = p;
      } else {
        hi = mid;
      }
    }
    return best;
  }

  struct RayHit {
    double distance = 0.0;
    std::uint32_t facet = 0;
  };

  // Nearest positive-distance intersection along a unit direction.
  std::optional<RayHit> ray_intersect(const Vec3& origin, const Vec3& direction,
                                      double max_distance = std::numeric_limits<double>::infinity()) const {
    const auto hit = bvh_.raycast(origin, direction, max_distance);
    if (!hit) return std::nullopt;
    return RayHit{hit->distance, hit->facet};
  }

 private:
  void build_edges() {
    // Per canonical pair: facet traversing min->max, facet traversing max->min, incidence count.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::array<std::int64_t, 3>> table;
    for (std::uint32_t fi = 0; fi < facets_.size(); ++fi) {
      const auto& f = facets_[fi];
      for (int k = 0; k < 3; ++k) {
        const std::uint32_t a = f[k];
        const std::uint32_t b = f[(k + 1) % 3];
        const auto key = std::minmax(a, b);
        auto [it, inserted] = table.try_emplace({key.first, key.second}, std::array<std::int64_t, 3>{-1, -1, 0});
        const int slot = a < b ? 0 : 1;
        ++it->second[2];
        if (it->second[slot] == -1) it->second[slot] = fi;
      }
    }
    for (const auto& [key, rec] : table) {
      const std::string name = "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ")";
      if (rec[2] != 2) {
        throw MeshError("OpenMesh", name + " has " + std::to_string(rec[2]) + " adjacent facets (expected 2)");
      }
      if (rec[0] < 0 || rec[1] < 0) {
        throw MeshError("InconsistentWinding", name + " is traversed twice in the same direction");
      }
    }
    edges_.reserve(table.size());
    for (const auto& [key, faces] : table) {
      edges_.push_back({{key.first, key.second},
                        {static_cast<std::uint32_t>(faces[0]), static_cast<std::uint32_t>(faces[1])}});
    }
    const auto v = static_cast<long>(vertices_.size());
    const auto e = static_cast<long>(edges_.size());
    const auto f = static_cast<long>(facets_.size());
    diagnostics_.euler_characteristic = static_cast<int>(v - e + f);
  }

  void compute_mass_properties() {
    normals_.resize(facets_.size());
    areas_.resize(facets_.size());
    double vol6 = 0.0;
    Vec3 moment = Vec3::Zero();
    bounding_radius_ = 0.0;
    for (const auto& v : vertices_) bounding_radius_ = std::max(bounding_radius_, v.norm());
    for (std::uint32_t i = 0; i < facets_.size(); ++i) {
      const auto c = corners(i);
      const Vec3 n = (c[1] - c[0]).cross(c[2] - c[0]);
      const double area = 0.5 * n.norm();
      if (!(area >= kMinFacetArea)) {
        throw MeshError("DegenerateFacet", "facet " + std::to_string(i) + " has area " + std::to_string(area) +
                                               " m^2 (minimum 1e-12)");
      }
      areas_[i] = area;
      normals_[i] = n / (2.0 * area);
      const double tet6 = c[0].dot(c[1].cross(c[2]));
      vol6 += tet6;
      moment += tet6 * (c[0] + c[1] + c[2]) / 4.0;
    }
    volume_ = vol6 / 6.0;
    if (!(volume_ > 0.0)) {
      throw MeshError("InconsistentWinding", "signed volume is not positive; facet normals point inward");
    }
    com_ = moment / vol6;
    diagnostics_.com_offset = com_.norm();
    diagnostics_.com_offset_warning = diagnostics_.com_offset > kComWarnFraction * bounding_radius_;
  }

  std::vector<Vec3> vertices_;
  std::vector<Triangle> facets_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
  std::vector<double> area_cdf_;
  std::vector<Edge> edges_;
  double volume_ = 0.0;
  Vec3 com_ = Vec3::Zero();
  double bounding_radius_ = 0.0;
  MeshDiagnostics diagnostics_;
  TriangleBvh bvh_;
};

// Volume by the divergence theorem: (1/3) sum over facets of area * (N . centroid).
inline double divergence_volume(const ShapeModel& model) {
  double acc = 0.0;
  for (std::uint32_t i = 0; i < model.facet_count(); ++i) {
    acc += model.areas()[i] * model.normals()[i].dot(model.centroid(i));
  }
  return acc / 3.0;
}

enum class ShapeFormat { Obj };

struct LoadOptions {
  double scale = 1.0;     // multiply coordinates (e.g. 1000 for km models)
  bool recenter = false;  // shift the center of mass to the origin
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view tok, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw MeshError("MalformedRecord", "line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  }
  return value;
}

// Face token "i", "i/t", "i//n" or "i/t/n"; negative indices are relative.
inline std::uint32_t parse_face_index(std::string_view tok, std::size_t vertex_count, std::size_t line) {
  const auto slash = tok.find('/');
  if (slash != std::string_view::npos) tok = tok.substr(0, slash);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || value == 0) {
    throw MeshError("MalformedRecord", "line " + std::to_string(line) + ": bad face index '" + std::string(tok) + "'");
  }
  const long resolved = value > 0 ? value - 1 : static_cast<long>(vertex_count) + value;
  if (resolved < 0 || resolved >= static_cast<long>(vertex_count)) {
    throw MeshError("MalformedRecord", "line " + std::to_string(line) + ": face index out of range");
  }
  return static_cast<std::uint32_t>(resolved);
}

}  // namespace detail

// Reads `v x y z` and `f i j k` records; `#` comments are skipped and other
// record types are counted in diagnostics().ignored_records.
inline ShapeModel load_shape(std::istream& in, ShapeFormat format = ShapeFormat::Obj, const LoadOptions& opts = {}) {
  if (format != ShapeFormat::Obj) throw MeshError("UnsupportedFormat", "only OBJ is supported");
  if (!(opts.scale > 0.0) || !std::isfinite(opts.scale)) throw ConfigError("shape scale must be positive");
  std::vector<Vec3> vertices;
  std::vector<Triangle> facets;
  std::size_t ignored = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tokens = detail::split_ws(line);
    if (tokens[0] == "v") {
      if (tokens.size() < 4) {
        throw MeshError("MalformedRecord", "line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      }
      vertices.emplace_back(detail::parse_double(tokens[1], line_no) * opts.scale,
                            detail::parse_double(tokens[2], line_no) * opts.scale,
                            detail::parse_double(tokens[3], line_no) * opts.scale);
    } else if (tokens[0] == "f") {
      if (tokens.size() != 4) {
        throw MeshError("NonTriangularFace", "line " + std::to_string(line_no) + ": face has " +
                                                 std::to_string(tokens.size() - 1) + " vertices");
      }
      facets.push_back({detail::parse_face_index(tokens[1], vertices.size(), line_no),
                        detail::parse_face_index(tokens[2], vertices.size(), line_no),
                        detail::parse_face_index(tokens[3], vertices.size(), line_no)});
    } else {
      ++ignored;
    }
  }
  return ShapeModel(std::move(vertices), std::move(facets), opts.recenter, ignored);
}

inline ShapeModel load_shape_string(std::string_view text, const LoadOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return load_shape(in, ShapeFormat::Obj, opts);
}

inline void write_obj(std::ostream& out, const ShapeModel& model) {
  out.precision(17);
  for (const auto& v : model.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : model.facets()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace asterhop

#pragma once

// Synthetic closed meshes for tests, demos and scenario files.

#include "asterhop/mesh.hpp"
#include "asterhop/random.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace asterhop::shapes {

struct MeshData {
  std::vector<Vec3> vertices;
  std::vector<Triangle> facets;

  ShapeModel build() const { return ShapeModel(vertices, facets); }
};

inline MeshData tetrahedron(double edge = 1.0) {
  const double s = edge / (2.0 * std::sqrt(2.0));
  return {{Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s)},
          {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}}};
}

// Axis-aligned box centered at the origin with full side lengths `size`.
inline MeshData box(const Vec3& size) {
  const Vec3 h = 0.5 * size;
  MeshData m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  }
  m.facets = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
              {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

inline MeshData cube(double side = 1.0) { return box(Vec3::Constant(side)); }

// Subdivided icosahedron projected to a sphere; 20 * 4^subdivisions facets.
inline MeshData icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  MeshData m;
  m.vertices = {Vec3(-1, t, 0), Vec3(1, t, 0),  Vec3(-1, -t, 0), Vec3(1, -t, 0),
                Vec3(0, -1, t), Vec3(0, 1, t),  Vec3(0, -1, -t), Vec3(0, 1, -t),
                Vec3(t, 0, -1), Vec3(t, 0, 1),  Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  for (auto& v : m.vertices) v.normalize();
  m.facets = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
              {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
              {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      const auto idx = static_cast<std::uint32_t>(m.vertices.size());
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      midpoint.emplace(std::pair{key.first, key.second}, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(m.facets.size() * 4);
    for (const auto& f : m.facets) {
      const auto ab = mid(f[0], f[1]);
      const auto bc = mid(f[1], f[2]);
      const auto ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.facets = std::move(next);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

// Triaxial ellipsoid with the given semi-axes.
inline MeshData ellipsoid(const Vec3& semi_axes, int subdivisions) {
  MeshData m = icosphere(1.0, subdivisions);
  for (auto& v : m.vertices) v = v.cwiseProduct(semi_axes);
  return m;
}

namespace detail {

// Seeded smooth relief on the unit sphere, mapped onto an ellipsoid.
struct LumpyMap {
  Vec3 semi_axes;
  double relief = 0.0;
  std::vector<Vec3> dirs;
  std::vector<double> amps;
  std::vector<double> widths;

  LumpyMap(const Vec3& axes, double rel, std::uint64_t seed) : semi_axes(axes), relief(rel) {
    Rng rng(seed);
    constexpr int kModes = 12;
    for (int k = 0; k < kModes; ++k) {
      dirs.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
      amps.push_back(rng.uniform(-1.0, 1.0));
      widths.push_back(rng.uniform(0.15, 0.5));
    }
  }

  Vec3 operator()(const Vec3& unit) const {
    double bump = 0.0;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const double c = unit.dot(dirs[k]);
      bump += amps[k] * std::exp(-(1.0 - c) / (widths[k] * widths[k]));
    }
    return unit.cwiseProduct(semi_axes) * (1.0 + relief * bump);
  }
};

}  // namespace detail

// Ellipsoid with smooth seeded radial relief of relative amplitude `relief`;
// a cheap stand-in for an irregular small body. The result is star-shaped.
inline MeshData lumpy_ellipsoid(const Vec3& semi_axes, int subdivisions, double relief, std::uint64_t seed) {
  MeshData m = icosphere(1.0, subdivisions);
  const detail::LumpyMap map(semi_axes, relief, seed);
  for (auto& v : m.vertices) v = map(v);
  return m;
}

// Conforming local refinement of a unit-sphere mesh. Each level splits every
// facet with a vertex within `angle` (rad) of `site` into four; neighbors left
// with one split edge are bisected, two split edges promote to a full split.
// New vertices are projected back to the unit sphere.
inline MeshData refine_unit_sphere(MeshData m, const Vec3& site, double angle, int levels) {
  const Vec3 c = site.normalized();
  const double cos_limit = std::cos(angle);
  auto key = [](std::uint32_t a, std::uint32_t b) {
    const auto k = std::minmax(a, b);
    return std::pair{k.first, k.second};
  };
  for (int level = 0; level < levels; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> split;  // edge -> midpoint (0 = pending)
    for (const auto& f : m.facets) {
      bool near = false;
      for (auto v : f) near = near || m.vertices[v].dot(c) >= cos_limit;
      if (!near) continue;
      for (int k = 0; k < 3; ++k) split.emplace(key(f[k], f[(k + 1) % 3]), 0);
    }
    // Closure: a facet with two split edges gets its third split as well.
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& f : m.facets) {
        int count = 0;
        for (int k = 0; k < 3; ++k) count += split.count(key(f[k], f[(k + 1) % 3])) ? 1 : 0;
        if (count == 2) {
          for (int k = 0; k < 3; ++k) changed |= split.emplace(key(f[k], f[(k + 1) % 3]), 0).second;
        }
      }
    }
    for (auto& [edge, idx] : split) {
      idx = static_cast<std::uint32_t>(m.vertices.size());
      m.vertices.push_back((m.vertices[edge.first] + m.vertices[edge.second]).normalized());
    }
    std::vector<Triangle> next;
    next.reserve(m.facets.size() * 2);
    for (const auto& f : m.facets) {
      std::array<std::int64_t, 3> mid{};  // midpoint of edge k = (f[k], f[k+1]), or -1
      int count = 0;
      for (int k = 0; k < 3; ++k) {
        const auto it = split.find(key(f[k], f[(k + 1) % 3]));
        mid[k] = it == split.end() ? -1 : static_cast<std::int64_t>(it->second);
        count += it == split.end() ? 0 : 1;
      }
      if (count == 0) {
        next.push_back(f);
      } else if (count == 3) {
        const auto ab = static_cast<std::uint32_t>(mid[0]);
        const auto bc = static_cast<std::uint32_t>(mid[1]);
        const auto ca = static_cast<std::uint32_t>(mid[2]);
        next.push_back({f[0], ab, ca});
        next.push_back({f[1], bc, ab});
        next.push_back({f[2], ca, bc});
        next.push_back({ab, bc, ca});
      } else {
        const int k = mid[0] >= 0 ? 0 : (mid[1] >= 0 ? 1 : 2);
        const auto m0 = static_cast<std::uint32_t>(mid[k]);
        const auto a = f[k];
        const auto b = f[(k + 1) % 3];
        const auto o = f[(k + 2) % 3];
        next.push_back({a, m0, o});
        next.push_back({m0, b, o});
      }
    }
    m.facets = std::move(next);
  }
  return m;
}

// Lumpy ellipsoid whose surface around `site` (a direction) is refined by
// `levels` halvings within `angle` rad and roughened there by seeded radial
// displacements of standard deviation `roughness` m. Away from the site the
// surface matches lumpy_ellipsoid with the same shape arguments.
inline MeshData rough_site_body(const Vec3& semi_axes, int subdivisions, double relief, std::uint64_t seed,
                                const Vec3& site, double angle, int levels, double roughness,
                                std::uint64_t roughness_seed) {
  MeshData m = refine_unit_sphere(icosphere(1.0, subdivisions), site, angle, levels);
  const detail::LumpyMap map(semi_axes, relief, seed);
  const Vec3 c = site.normalized();
  const double cos_limit = std::cos(angle);
  Rng rng(roughness_seed);
  for (auto& v : m.vertices) {
    const double bump = rng.normal();
    const bool inside = v.dot(c) >= cos_limit;
    v = map(v);
    if (inside) v += roughness * bump * v.normalized();
  }
  return m;
}

}  // namespace asterhop::shapes

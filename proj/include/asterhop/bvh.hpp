#pragma once

#include "asterhop/common.hpp"
#include "asterhop/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace asterhop {

using Triangle = std::array<std::uint32_t, 3>;

// Binary bounding-volume hierarchy over a triangle soup, median split on the
// widest centroid axis. Queries are exact: results equal a brute-force scan,
// with exact distance ties resolved to the lowest triangle index.
class TriangleBvh {
 public:
  struct NearestHit {
    std::uint32_t facet = 0;
    Vec3 point = Vec3::Zero();
    std::array<double, 3> bary{1.0, 0.0, 0.0};
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  struct RayHit {
    std::uint32_t facet = 0;
    double distance = 0.0;
  };

  TriangleBvh() = default;

  TriangleBvh(std::span<const Vec3> vertices, std::span<const Triangle> triangles) {
    corners_.reserve(triangles.size());
    for (const auto& t : triangles) corners_.push_back({vertices[t[0]], vertices[t[1]], vertices[t[2]]});
    order_.resize(triangles.size());
    std::iota(order_.begin(), order_.end(), 0U);
    if (!triangles.empty()) {
      nodes_.reserve(2 * triangles.size());
      build(0, static_cast<std::uint32_t>(triangles.size()));
    }
  }

  std::size_t size() const { return corners_.size(); }

  NearestHit closest(const Vec3& p) const {
    NearestHit best;
    if (nodes_.empty()) return best;
    std::array<std::uint32_t, 128> stack{};
    std::size_t top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squared_distance(p) > best.squared_distance) continue;
      if (node.count > 0) {
        for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
          const std::uint32_t f = order_[k];
          const auto& c = corners_[f];
          const auto cp = geometry::closest_point_on_triangle(p, c[0], c[1], c[2]);
          const double d2 = (cp.point - p).squaredNorm();
          if (d2 < best.squared_distance || (d2 == best.squared_distance && f < best.facet)) {
            best = {f, cp.point, cp.bary, d2};
          }
        }
        continue;
      }
      // Visit the nearer child first.
      const double dl = nodes_[node.left].box.squared_distance(p);
      const double dr = nodes_[node.right].box.squared_distance(p);
      if (dl <= dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    return best;
  }

  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir,
                                double t_max = std::numeric_limits<double>::infinity()) const {
    if (nodes_.empty()) return std::nullopt;
    const geometry::WatertightRay ray(origin, dir);
    const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    std::optional<RayHit> best;
    double limit = t_max;
    std::array<std::uint32_t, 128> stack{};
    std::size_t top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      const auto entry = node.box.ray_entry(origin, inv, limit);
      if (!entry) continue;
      if (node.count > 0) {
        for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
          const std::uint32_t f = order_[k];
          const auto& c = corners_[f];
          const auto t = ray.intersect(c[0], c[1], c[2]);
          if (!t || *t > limit) continue;
          if (!best || *t < best->distance || (*t == best->distance && f < best->facet)) {
            best = RayHit{f, *t};
            limit = *t;
          }
        }
        continue;
      }
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
    return best;
  }

 private:
  struct Node {
    geometry::Aabb box;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t first = 0;
    std::uint32_t count = 0;  // > 0 for leaves
  };

  static constexpr std::uint32_t kLeafSize = 4;

  std::uint32_t build(std::uint32_t first, std::uint32_t last) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    geometry::Aabb box;
    geometry::Aabb centroids;
    for (std::uint32_t k = first; k < last; ++k) {
      const auto& c = corners_[order_[k]];
      for (const auto& v : c) box.extend(v);
      centroids.extend((c[0] + c[1] + c[2]) / 3.0);
    }
    nodes_[index].box = box;
    if (last - first <= kLeafSize) {
      nodes_[index].first = first;
      nodes_[index].count = last - first;
      return index;
    }
    int axis = 0;
    (centroids.hi - centroids.lo).maxCoeff(&axis);
    const std::uint32_t mid = first + (last - first) / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + last,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = corners_[a][0][axis] + corners_[a][1][axis] + corners_[a][2][axis];
                       const double cb = corners_[b][0][axis] + corners_[b][1][axis] + corners_[b][2][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const std::uint32_t left = build(first, mid);
    const std::uint32_t right = build(mid, last);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  std::vector<std::array<Vec3, 3>> corners_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace asterhop

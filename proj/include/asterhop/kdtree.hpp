#pragma once

#include "asterhop/common.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace asterhop {

// Exact nearest-neighbor index over 3-D points. Supports a balanced bulk
// build and incremental insertion (unbalanced, used while growing trees).
// Exact distance ties resolve to the lowest point index.
class KdTree {
 public:
  struct Match {
    std::uint32_t index = 0;
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    nodes_.reserve(points_.size());
    std::vector<std::uint32_t> ids(points_.size());
    std::iota(ids.begin(), ids.end(), 0U);
    root_ = build(ids, 0, ids.size(), 0);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::uint32_t i) const { return points_[i]; }

  std::uint32_t insert(const Vec3& p) {
    const auto id = static_cast<std::uint32_t>(points_.size());
    points_.push_back(p);
    const auto node = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({id, 0, -1, -1});
    if (root_ < 0) {
      root_ = node;
      return id;
    }
    std::int32_t cur = root_;
    while (true) {
      Node& n = nodes_[cur];
      const int axis = n.axis;
      const bool go_left = p[axis] < points_[n.point][axis];
      std::int32_t& child = go_left ? n.left : n.right;
      if (child < 0) {
        child = node;
        nodes_[node].axis = static_cast<std::uint8_t>((axis + 1) % 3);
        return id;
      }
      cur = child;
    }
  }

  Match nearest(const Vec3& q) const {
    Match best;
    if (root_ < 0) return best;
    search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    std::uint32_t point;
    std::uint8_t axis;
    std::int32_t left;
    std::int32_t right;
  };

  std::int32_t build(std::vector<std::uint32_t>& ids, std::size_t first, std::size_t last, int depth) {
    if (first >= last) return -1;
    // Split on the widest extent for better balance on flat scans.
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t k = first; k < last; ++k) {
      lo = lo.cwiseMin(points_[ids[k]]);
      hi = hi.cwiseMax(points_[ids[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = first + (last - first) / 2;
    std::nth_element(ids.begin() + static_cast<std::ptrdiff_t>(first), ids.begin() + static_cast<std::ptrdiff_t>(mid),
                     ids.begin() + static_cast<std::ptrdiff_t>(last), [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis] ||
                              (points_[a][axis] == points_[b][axis] && a < b);
                     });
    const auto node = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({ids[mid], static_cast<std::uint8_t>(axis), -1, -1});
    const std::int32_t left = build(ids, first, mid, depth + 1);
    const std::int32_t right = build(ids, mid + 1, last, depth + 1);
    nodes_[node].left = left;
    nodes_[node].right = right;
    return node;
  }

  void search(std::int32_t node, const Vec3& q, Match& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const Vec3& p = points_[n.point];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best.squared_distance || (d2 == best.squared_distance && n.point < best.index)) {
      best = {n.point, d2};
    }
    const double diff = q[n.axis] - p[n.axis];
    search(diff < 0.0 ? n.left : n.right, q, best);
    // Equal keys may sit on either side, hence <= on the far-side test.
    if (diff * diff <= best.squared_distance) search(diff < 0.0 ? n.right : n.left, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace asterhop

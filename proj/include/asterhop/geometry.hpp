#pragma once

#include "asterhop/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace asterhop::geometry {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 center() const { return 0.5 * (lo + hi); }

  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }

  // Slab test; returns the entry distance if the ray hits within [0, t_max].
  std::optional<double> ray_entry(const Vec3& origin, const Vec3& inv_dir, double t_max) const {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double tn = (lo[a] - origin[a]) * inv_dir[a];
      double tf = (hi[a] - origin[a]) * inv_dir[a];
      if (tn > tf) std::swap(tn, tf);
      // fmax/fmin drop the NaN produced by 0 * inf when the ray lies in a slab plane.
      t0 = std::fmax(t0, tn);
      t1 = std::fmin(t1, tf);
    }
    // Padding keeps rays that graze a shared face from being culled.
    if (t0 > t1 * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()) + 1e-300) return std::nullopt;
    return t0;
  }
};

struct ClosestPoint {
  Vec3 point;
  std::array<double, 3> bary;  // weights of (a, b, c)
};

// Closest point on triangle (a, b, c) to p, by Voronoi-region classification.
inline ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, {1.0, 0.0, 0.0}};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, {0.0, 1.0, 0.0}};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1.0 - v, v, 0.0}};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, {0.0, 0.0, 1.0}};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1.0 - w, 0.0, w}};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0.0, 1.0 - w, w}};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, {1.0 - v - w, v, w}};
}

// Watertight ray/triangle test (Woop, Benthin, Wald 2013). Edges shared by two
// triangles are classified consistently, so a ray cannot slip through a seam.
// Returns the hit distance along `dir` (which need not be normalized).
class WatertightRay {
 public:
  WatertightRay(const Vec3& origin, const Vec3& dir) : origin_(origin) {
    kz_ = 0;
    for (int a = 1; a < 3; ++a) {
      if (std::abs(dir[a]) > std::abs(dir[kz_])) kz_ = a;
    }
    kx_ = (kz_ + 1) % 3;
    ky_ = (kx_ + 1) % 3;
    if (dir[kz_] < 0.0) std::swap(kx_, ky_);
    sx_ = dir[kx_] / dir[kz_];
    sy_ = dir[ky_] / dir[kz_];
    sz_ = 1.0 / dir[kz_];
  }

  std::optional<double> intersect(const Vec3& a, const Vec3& b, const Vec3& c) const {
    const Vec3 pa = a - origin_;
    const Vec3 pb = b - origin_;
    const Vec3 pc = c - origin_;
    const double ax = pa[kx_] - sx_ * pa[kz_];
    const double ay = pa[ky_] - sy_ * pa[kz_];
    const double bx = pb[kx_] - sx_ * pb[kz_];
    const double by = pb[ky_] - sy_ * pb[kz_];
    const double cx = pc[kx_] - sx_ * pc[kz_];
    const double cy = pc[ky_] - sy_ * pc[kz_];

    const double u = cx * by - cy * bx;
    const double v = ax * cy - ay * cx;
    const double w = bx * ay - by * ax;
    if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
    const double det = u + v + w;
    if (det == 0.0) return std::nullopt;

    const double az = sz_ * pa[kz_];
    const double bz = sz_ * pb[kz_];
    const double cz = sz_ * pc[kz_];
    const double t = (u * az + v * bz + w * cz) / det;
    if (!(t > 0.0)) return std::nullopt;
    return t;
  }

 private:
  Vec3 origin_;
  int kx_ = 0, ky_ = 1, kz_ = 2;
  double sx_ = 0.0, sy_ = 0.0, sz_ = 1.0;
};

// Signed solid angle of triangle (a, b, c) seen from p (Van Oosterom & Strackee).
// Positive when p lies on the side opposite to the counter-clockwise normal.
inline double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ra = a - p;
  const Vec3 rb = b - p;
  const Vec3 rc = c - p;
  const double la = ra.norm();
  const double lb = rb.norm();
  const double lc = rc.norm();
  const double num = ra.dot(rb.cross(rc));
  const double den = la * lb * lc + la * rb.dot(rc) + lb * rc.dot(ra) + lc * ra.dot(rb);
  return 2.0 * std::atan2(num, den);
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (a + s * ab - p).norm();
}

}  // namespace asterhop::geometry

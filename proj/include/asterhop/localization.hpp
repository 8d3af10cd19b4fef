#pragma once

#include "asterhop/common.hpp"
#include "asterhop/kdtree.hpp"
#include "asterhop/mesh.hpp"
#include "asterhop/parallel.hpp"
#include "asterhop/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asterhop {

// Rigid motion x -> R x + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& translation = Vec3::Zero()) {
    return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), translation};
  }

  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Vec3& translation) {
    return {q.normalized().toRotationMatrix(), translation};
  }

  Vec3 apply(const Vec3& p) const { return R * p + t; }

  // (a * b)(x) = a(b(x))
  RigidTransform operator*(const RigidTransform& b) const { return {R * b.R, R * b.t + t}; }

  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

  // Unit quaternion with non-negative scalar part.
  Eigen::Quaterniond quaternion() const {
    Eigen::Quaterniond q(R);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return q;
  }

  double rotation_angle() const {
    return std::acos(std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0));
  }

  // Largest deviation of R from a proper rotation.
  double orthonormality_error() const {
    return std::max((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff(), std::abs(R.determinant() - 1.0));
  }
};

// Rotation angle of a^-1 b, the geodesic distance between two rotations.
inline double rotation_difference(const RigidTransform& a, const RigidTransform& b) {
  return (a.inverse() * b).rotation_angle();
}

struct PointCloud {
  std::vector<Vec3> points;                // sensor frame
  std::optional<RigidTransform> origin;    // true pose, when known
  double time = 0.0;
};

struct ScanConfig {
  int azimuth = 180;
  int elevation = 90;   // rings from pole to pole inclusive; each pole is one ray
  double max_range = 500.0;
  double noise = 0.0;   // range sigma, m
  double frequency = 0.5;
  bool jitter = false;  // random direction inside each grid cell

  void validate() const {
    if (azimuth < 2 || elevation < 2) throw ConfigError("scan grid counts must be >= 2");
    if (!(frequency > 0.0)) throw ConfigError("scan frequency must be positive");
    if (!(max_range > 0.0)) throw ConfigError("scan max_range must be positive");
    if (!(noise >= 0.0)) throw ConfigError("scan noise must be non-negative");
  }

  std::size_t ray_count() const {
    return static_cast<std::size_t>(azimuth) * static_cast<std::size_t>(elevation - 2) + 2;
  }
};

// Unit ray directions of the scan grid in the sensor frame.
inline std::vector<Vec3> scan_directions(const ScanConfig& cfg, Rng* rng = nullptr) {
  cfg.validate();
  std::vector<Vec3> dirs;
  dirs.reserve(cfg.ray_count());
  const double d_el = kPi / (cfg.elevation - 1);
  const double d_az = 2.0 * kPi / cfg.azimuth;
  dirs.emplace_back(0.0, 0.0, -1.0);
  for (int i = 1; i + 1 < cfg.elevation; ++i) {
    for (int j = 0; j < cfg.azimuth; ++j) {
      double el = -0.5 * kPi + i * d_el;
      double az = j * d_az;
      if (cfg.jitter && rng) {
        el += (rng->uniform() - 0.5) * d_el;
        az += (rng->uniform() - 0.5) * d_az;
      }
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }
  }
  dirs.emplace_back(0.0, 0.0, 1.0);
  return dirs;
}

// Ray-cast scan of the mesh from `pose` (sensor -> body frame). Points are
// returned in the sensor frame; rays without a hit inside max_range are dropped.
inline PointCloud simulate_scan(const ShapeModel& model, const RigidTransform& pose, const ScanConfig& cfg, Rng& rng,
                                unsigned threads = 1) {
  cfg.validate();
  if (model.contains(pose.t) == Containment::Inside) {
    throw ConfigError("scan origin lies inside the body");
  }
  const auto dirs = scan_directions(cfg, &rng);
  std::vector<double> range(dirs.size(), -1.0);
  parallel_for(dirs.size(), threads, [&](std::size_t i) {
    if (auto hit = model.ray_intersect(pose.t, pose.R * dirs[i], cfg.max_range)) range[i] = hit->distance;
  });
  PointCloud cloud;
  cloud.origin = pose;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (range[i] < 0.0) continue;
    double r = range[i];
    if (cfg.noise > 0.0) r = std::clamp(r + rng.normal(0.0, cfg.noise), 0.0, cfg.max_range);
    cloud.points.push_back(r * dirs[i]);
  }
  return cloud;
}

namespace detail {

// Throws unless the point set spans at least a line's worth of directions.
inline void require_non_collinear(std::span<const Vec3> pts, const char* what) {
  if (pts.size() < 3) throw DegenerateGeometry(std::string(what) + " has fewer than 3 points");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const auto& ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw DegenerateGeometry(std::string(what) + " is collinear or coincident");
  }
}

}  // namespace detail

// Least-squares rigid motion taking src[i] onto dst[i] (closed form: polar
// factor of the cross-covariance, reflection-corrected).
inline RigidTransform best_fit_transform(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3) throw DegenerateGeometry("alignment needs >= 3 matched pairs");
  Vec3 cs = Vec3::Zero();
  Vec3 cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  const double n = static_cast<double>(src.size());
  cs /= n;
  cd /= n;
  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
  const Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) throw DegenerateGeometry("matched point sets are collinear or coincident");
  const Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  RigidTransform T;
  T.R = V * D * U.transpose();
  T.t = cd - T.R * cs;
  return T;
}

struct IcpOptions {
  int max_iter = 60;
  double tol = 1e-10;  // m^2, on the change of the mean squared distance
  double max_correspondence = std::numeric_limits<double>::infinity();
  unsigned threads = 1;

  void validate() const {
    if (max_iter < 1) throw ConfigError("icp max_iter must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("icp tol must be non-negative");
    if (!(max_correspondence > 0.0)) throw ConfigError("icp max_correspondence must be positive");
  }
};

struct IcpResult {
  RigidTransform transform;
  double mean_squared = std::numeric_limits<double>::infinity();  // D_ms at the returned transform
  std::vector<double> history;  // D_ms after each matching stage
  int iterations = 0;
  bool converged = false;
};

// Point-to-point ICP registering D onto M: alternate exact nearest-neighbor
// matching (D -> M) and closed-form alignment of the matched pairs. With a
// finite max_correspondence c, pairs farther than c are left out of the
// alignment and D_ms is the mean of min(d^2, c^2) over all of D. Each stage
// cannot increase D_ms; an increase signals the round-off floor and stops the
// loop at the previous iterate.
inline IcpResult icp(std::span<const Vec3> D, std::span<const Vec3> M, const RigidTransform& init = {},
                     const IcpOptions& opts = {}) {
  opts.validate();
  detail::require_non_collinear(D, "source cloud");
  detail::require_non_collinear(M, "model cloud");
  const KdTree tree(M);
  const double max_d2 = opts.max_correspondence * opts.max_correspondence;

  std::vector<std::uint32_t> match(D.size());
  std::vector<double> d2(D.size());
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  src.reserve(D.size());
  dst.reserve(D.size());

  IcpResult res;
  RigidTransform T = init;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    parallel_for(D.size(), opts.threads, [&](std::size_t i) {
      const auto m = tree.nearest(T.apply(D[i]));
      match[i] = m.index;
      d2[i] = m.squared_distance;
    });
    src.clear();
    dst.clear();
    double sum = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) {
      if (d2[i] > max_d2) {
        sum += max_d2;
        continue;
      }
      src.push_back(D[i]);
      dst.push_back(M[match[i]]);
      sum += d2[i];
    }
    if (src.size() < 3) throw DegenerateGeometry("fewer than 3 correspondences within max_correspondence");
    const double ms = sum / static_cast<double>(D.size());
    if (!res.history.empty() && ms > res.history.back()) {
      res.converged = true;
      break;
    }
    res.transform = T;
    res.mean_squared = ms;
    res.iterations = iter;
    res.history.push_back(ms);
    if (res.history.size() >= 2 && res.history[res.history.size() - 2] - ms < opts.tol) {
      res.converged = true;
      break;
    }
    T = best_fit_transform(src, dst);
  }
  return res;
}

inline IcpResult icp(const PointCloud& D, const PointCloud& M, const RigidTransform& init = {},
                     const IcpOptions& opts = {}) {
  return icp(std::span<const Vec3>(D.points), std::span<const Vec3>(M.points), init, opts);
}

// Dead-reckoning by consecutive scan registration. Poses map the sensor frame
// of each scan into the body frame; the first equals `init`. Each ICP starts
// from the previous increment (constant-velocity prior).
inline std::vector<RigidTransform> chain_poses(std::span<const PointCloud> scans, const RigidTransform& init,
                                               const IcpOptions& opts = {}) {
  if (scans.size() < 2) throw ConfigError("chain_poses needs at least 2 scans");
  std::vector<RigidTransform> poses{init};
  RigidTransform increment;
  for (std::size_t k = 1; k < scans.size(); ++k) {
    try {
      const auto r = icp(scans[k], scans[k - 1], increment, opts);
      increment = r.transform;
    } catch (const DegenerateGeometry& e) {
      throw DegenerateGeometry("scan " + std::to_string(k) + ": " + e.what());
    }
    poses.push_back(poses.back() * increment);
  }
  return poses;
}

}  // namespace asterhop

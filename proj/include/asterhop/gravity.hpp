#pragma once

#include "asterhop/common.hpp"
#include "asterhop/geometry.hpp"
#include "asterhop/mesh.hpp"
#include "asterhop/parallel.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace asterhop {

struct FieldSample {
  double potential = 0.0;       // U, m^2/s^2; positive outside the body
  Vec3 acceleration = Vec3::Zero();  // g = grad U, m/s^2; points toward the body
  Mat3 gradient = Mat3::Zero();      // grad grad U, 1/s^2
  double laplacian = 0.0;            // 0 outside, -4 pi G rho inside
};

// Constant-density polyhedron gravity (Werner & Scheeres 1997). Potential,
// acceleration, gravity-gradient matrix and Laplacian are sums of closed-form
// edge ("wire" logarithm L_e) and face (solid angle w_f) terms weighted by
// dyads that depend only on the mesh:
//
//   U         =  G rho/2 [ sum_e r_e.E_e.r_e L_e - sum_f r_f.F_f.r_f w_f ]
//   grad U    =  G rho   [-sum_e E_e r_e L_e      + sum_f F_f r_f w_f     ]
//   grad^2 U  =  G rho   [ sum_e E_e L_e          - sum_f F_f w_f         ]
//   lap U     = -G rho sum_f w_f
//
// with r_e, r_f running from the field point to any point of the edge/face.
// F_f = n_f n_f^T and E_e = n_A n_A,e^T + n_B n_B,e^T from the face normals and
// outward in-plane edge normals of the two facets sharing the edge.
class GravityField {
 public:
  static constexpr double kDefaultG = 6.67430e-11;
  static constexpr double kSingularFraction = 1e-9;

  struct EdgeDyad {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double length = 0.0;
    Mat3 dyad = Mat3::Zero();
  };

  GravityField(std::shared_ptr<const ShapeModel> shape, double density, double gravitational_constant = kDefaultG)
      : shape_(std::move(shape)), density_(density), G_(gravitational_constant) {
    if (!shape_) throw ConfigError("gravity field needs a shape model");
    if (!(density_ > 0.0) || !std::isfinite(density_)) throw ConfigError("density must be positive");
    if (!(G_ > 0.0) || !std::isfinite(G_)) throw ConfigError("gravitational constant must be positive");
    const auto& model = *shape_;
    const auto verts = model.vertices();
    const auto normals = model.normals();
    const auto facets = model.facets();
    edges_.reserve(model.edge_count());
    for (const auto& e : model.edges()) {
      const Vec3& p0 = verts[e.v[0]];
      const Vec3& p1 = verts[e.v[1]];
      const Vec3& nA = normals[e.faces[0]];
      const Vec3& nB = normals[e.faces[1]];
      // Facet A walks p0 -> p1, facet B walks p1 -> p0; edge x normal points out of the facet.
      const Vec3 nAe = (p1 - p0).cross(nA).normalized();
      const Vec3 nBe = (p0 - p1).cross(nB).normalized();
      edges_.push_back({e.v[0], e.v[1], (p1 - p0).norm(), nA * nAe.transpose() + nB * nBe.transpose()});
    }
    faces_.reserve(facets.size());
    for (std::size_t i = 0; i < facets.size(); ++i) faces_.push_back({facets[i], normals[i]});
    singular_distance_ = kSingularFraction * model.bounding_radius();
  }

  const ShapeModel& shape() const { return *shape_; }
  const std::shared_ptr<const ShapeModel>& shape_ptr() const { return shape_; }
  double density() const { return density_; }
  double gravitational_constant() const { return G_; }
  double mass() const { return density_ * shape_->volume(); }
  double mu() const { return G_ * mass(); }
  // Laplacian value inside the body.
  double interior_laplacian() const { return -4.0 * kPi * G_ * density_; }

  std::span<const EdgeDyad> edge_dyads() const { return edges_; }
  Mat3 face_dyad(std::size_t f) const { return faces_[f].normal * faces_[f].normal.transpose(); }

  FieldSample evaluate(const Vec3& r) const {
    FieldSample s;
    accumulate<true, true>(r, s);
    return s;
  }

  double potential(const Vec3& r) const {
    FieldSample s;
    accumulate<true, false>(r, s);
    return s.potential;
  }

  // Acceleration and Laplacian only; the cheap path used by the integrator.
  Vec3 acceleration(const Vec3& r, double* laplacian = nullptr) const {
    FieldSample s;
    accumulate<false, false>(r, s);
    if (laplacian) *laplacian = s.laplacian;
    return s.acceleration;
  }

  // Acceleration, gradient matrix and Laplacian (no potential).
  FieldSample acceleration_and_gradient(const Vec3& r) const {
    FieldSample s;
    accumulate<false, true>(r, s);
    return s;
  }

  // Interior test from the Laplacian branch (summed solid angle).
  bool is_interior(double laplacian) const { return laplacian < 0.5 * interior_laplacian(); }

  std::vector<FieldSample> evaluate_batch(std::span<const Vec3> points, unsigned threads = 1) const {
    std::vector<FieldSample> out(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { out[i] = evaluate(points[i]); });
    return out;
  }

 private:
  struct FaceTerm {
    Triangle v;
    Vec3 normal;
  };

  struct Scratch {
    std::vector<Vec3> rel;
    std::vector<double> dist;
  };

  static Scratch& scratch() {
    thread_local Scratch s;
    return s;
  }

  [[noreturn]] void singular(const Vec3& r, const std::string& what) const {
    throw SingularEvaluation("field point (" + std::to_string(r.x()) + ", " + std::to_string(r.y()) + ", " +
                             std::to_string(r.z()) + ") lies on " + what);
  }

  template <bool kPotential, bool kGradient>
  void accumulate(const Vec3& r, FieldSample& out) const {
    const auto verts = shape_->vertices();
    auto& buf = scratch();
    if (buf.rel.size() < verts.size()) {
      buf.rel.resize(verts.size());
      buf.dist.resize(verts.size());
    }
    for (std::size_t i = 0; i < verts.size(); ++i) {
      buf.rel[i] = verts[i] - r;
      buf.dist[i] = buf.rel[i].norm();
      if (buf.dist[i] < singular_distance_) singular(r, "a vertex");
    }

    double pot = 0.0;
    Vec3 acc = Vec3::Zero();
    Mat3 grad = Mat3::Zero();
    for (const auto& e : edges_) {
      const double la = buf.dist[e.a];
      const double lb = buf.dist[e.b];
      const double sum = la + lb;
      const double gap = sum - e.length;
      if (gap <= 0.0 || (gap < 1e-6 * e.length &&
          geometry::point_segment_distance(r, verts[e.a], verts[e.b]) < singular_distance_)) {
        singular(r, "an edge");
      }
      const double wire = std::log((sum + e.length) / gap);
      const Vec3& re = buf.rel[e.a];
      const Vec3 er = e.dyad * re;
      if constexpr (kPotential) pot += re.dot(er) * wire;
      acc -= er * wire;
      if constexpr (kGradient) grad += e.dyad * wire;
    }
    double omega_sum = 0.0;
    for (const auto& f : faces_) {
      const Vec3& r1 = buf.rel[f.v[0]];
      const Vec3& r2 = buf.rel[f.v[1]];
      const Vec3& r3 = buf.rel[f.v[2]];
      const double l1 = buf.dist[f.v[0]];
      const double l2 = buf.dist[f.v[1]];
      const double l3 = buf.dist[f.v[2]];
      const double num = r1.dot(r2.cross(r3));
      const double den = l1 * l2 * l3 + l1 * r2.dot(r3) + l2 * r3.dot(r1) + l3 * r1.dot(r2);
      const double omega = 2.0 * std::atan2(num, den);
      omega_sum += omega;
      const double nr = f.normal.dot(r1);
      if constexpr (kPotential) pot -= nr * nr * omega;
      acc += f.normal * (nr * omega);
      if constexpr (kGradient) grad.noalias() -= (f.normal * f.normal.transpose()) * omega;
    }
    const double k = G_ * density_;
    out.potential = 0.5 * k * pot;
    out.acceleration = k * acc;
    out.gradient = k * grad;
    out.laplacian = -k * omega_sum;
  }

  std::shared_ptr<const ShapeModel> shape_;
  double density_;
  double G_;
  double singular_distance_ = 0.0;
  std::vector<EdgeDyad> edges_;
  std::vector<FaceTerm> faces_;
};

// Local escape speed sqrt(2 U(r)) from the non-rotating potential. The angular
// velocity is accepted for a future effective-potential variant and unused.
inline double escape_speed(const GravityField& field, const Vec3& r, const Vec3& /*omega*/ = Vec3::Zero()) {
  const double u = field.potential(r);
  return std::sqrt(std::max(0.0, 2.0 * u));
}

}  // namespace asterhop

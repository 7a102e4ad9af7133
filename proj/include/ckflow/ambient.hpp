#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>

namespace ckflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using ChartPoint = Vec3;
using ScalarField = std::function<double(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;

// gamma[k](i, j) is the symbol with upper index k
using Christoffel = std::array<Mat3, 3>;

enum class GeometryKind { euclidean, paper_example, poincare_ball };

struct DiffOps {
  double relative_step = 1e-4;  // fraction of the distance to the domain boundary
  double min_step = 1e-6;
};

// Conformally flat metric g = exp(2 f) * identity on an open subset of R^3.
class AmbientGeometry {
 public:
  static AmbientGeometry euclidean();
  static AmbientGeometry paper_example();
  static AmbientGeometry poincare_ball(double radius = 1.0);
  static AmbientGeometry from_name(const std::string& name, double radius = 1.0);

  GeometryKind kind() const { return kind_; }
  std::string name() const;
  double radius() const { return radius_; }
  bool is_flat() const { return kind_ != GeometryKind::poincare_ball; }
  // Ric = einstein_constant() * g for every built-in geometry
  double einstein_constant() const { return is_flat() ? 0.0 : -2.0; }

  // f is finite at p (the origin included)
  bool factor_defined(const Vec3& p) const;
  // the open working domain, which excludes the origin where the dilation field vanishes
  bool contains(const Vec3& p) const;
  double boundary_distance(const Vec3& p) const;
  double fd_step(const Vec3& p) const;
  // throws DomainExit unless p sits inside the domain with a full stencil margin
  void require(const Vec3& p) const;
  // largest coordinate radius of the domain (infinity for euclidean)
  double outer_radius() const;

  double f(const Vec3& p) const;
  Vec3 grad_f(const Vec3& p) const;
  Mat3 hess_f(const Vec3& p) const;  // flat second derivatives

  const DiffOps& ops() const { return ops_; }
  void set_ops(const DiffOps& ops) { ops_ = ops; }

 private:
  AmbientGeometry(GeometryKind kind, double radius) : kind_(kind), radius_(radius) {}
  GeometryKind kind_;
  double radius_ = 1.0;
  DiffOps ops_;
};

Mat3 metric_at(const AmbientGeometry& geom, const Vec3& p);
Vec3 grad_f(const AmbientGeometry& geom, const Vec3& p);

// flat central differences
Vec3 gradient_fd(const ScalarField& field, const Vec3& p, double h);
Mat3 hessian_fd(const ScalarField& field, const Vec3& p, double h);

// covariant Hessian of a scalar field with respect to g
Mat3 hessian_scalar(const AmbientGeometry& geom, const ScalarField& field, const Vec3& p);

Christoffel christoffels_at(const AmbientGeometry& geom, const Vec3& p);
Christoffel christoffels_fd(const AmbientGeometry& geom, const Vec3& p);

Mat3 ricci_at(const AmbientGeometry& geom, const Vec3& p);
// generic conformal-change formula in dimension three
Mat3 ricci_conformal(const AmbientGeometry& geom, const Vec3& p);
// contraction of the Riemann tensor built from differentiated Christoffels
Mat3 ricci_fd(const AmbientGeometry& geom, const Vec3& p);

// (L_X g)_ij by finite differences
Mat3 lie_derivative_metric(const AmbientGeometry& geom, const VectorField& X, const Vec3& p);

}  // namespace ckflow

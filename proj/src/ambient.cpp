#include "ckflow/ambient.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ckflow/errors.hpp"

namespace ckflow {

namespace {

const Vec3 kPole{2.0, 0.0, 0.0};

std::string describe(const Vec3& p) {
  std::ostringstream os;
  os.precision(9);
  os << "(" << p.x() << ", " << p.y() << ", " << p.z() << ")";
  return os.str();
}

}  // namespace

AmbientGeometry AmbientGeometry::euclidean() { return {GeometryKind::euclidean, 1.0}; }

AmbientGeometry AmbientGeometry::paper_example() { return {GeometryKind::paper_example, 2.0}; }

AmbientGeometry AmbientGeometry::poincare_ball(double radius) {
  if (!(radius > 0.0)) throw ConfigError("poincare_ball radius must be positive");
  return {GeometryKind::poincare_ball, radius};
}

AmbientGeometry AmbientGeometry::from_name(const std::string& name, double radius) {
  if (name == "euclidean") return euclidean();
  if (name == "paper_example") return paper_example();
  if (name == "poincare_ball") return poincare_ball(radius);
  throw ConfigError("unknown geometry '" + name + "'");
}

std::string AmbientGeometry::name() const {
  switch (kind_) {
    case GeometryKind::euclidean: return "euclidean";
    case GeometryKind::paper_example: return "paper_example";
    case GeometryKind::poincare_ball: return "poincare_ball";
  }
  return "?";
}

double AmbientGeometry::outer_radius() const {
  return kind_ == GeometryKind::euclidean ? std::numeric_limits<double>::infinity() : radius_;
}

bool AmbientGeometry::factor_defined(const Vec3& p) const {
  if (!p.allFinite()) return false;
  return kind_ == GeometryKind::euclidean || p.norm() < radius_;
}

bool AmbientGeometry::contains(const Vec3& p) const {
  return factor_defined(p) && p.norm() > 0.0;
}

double AmbientGeometry::boundary_distance(const Vec3& p) const {
  const double r = p.norm();
  if (kind_ == GeometryKind::euclidean) return r;
  return std::max(0.0, std::min(r, radius_ - r));
}

double AmbientGeometry::fd_step(const Vec3& p) const {
  return std::max(ops_.relative_step * boundary_distance(p), ops_.min_step);
}

void AmbientGeometry::require(const Vec3& p) const {
  if (!contains(p) || boundary_distance(p) <= 2.0 * fd_step(p))
    throw DomainExit("point " + describe(p) + " is outside the " + name() + " domain");
}

double AmbientGeometry::f(const Vec3& p) const {
  switch (kind_) {
    case GeometryKind::euclidean: return 0.0;
    case GeometryKind::paper_example: return -std::log((p - kPole).squaredNorm());
    case GeometryKind::poincare_ball:
      return std::log(2.0 * radius_) - std::log(radius_ * radius_ - p.squaredNorm());
  }
  return 0.0;
}

Vec3 AmbientGeometry::grad_f(const Vec3& p) const {
  switch (kind_) {
    case GeometryKind::euclidean: return Vec3::Zero();
    case GeometryKind::paper_example: {
      const Vec3 d = p - kPole;
      return -2.0 * d / d.squaredNorm();
    }
    case GeometryKind::poincare_ball: return 2.0 * p / (radius_ * radius_ - p.squaredNorm());
  }
  return Vec3::Zero();
}

Mat3 AmbientGeometry::hess_f(const Vec3& p) const {
  switch (kind_) {
    case GeometryKind::euclidean: return Mat3::Zero();
    case GeometryKind::paper_example: {
      const Vec3 d = p - kPole;
      const double q = d.squaredNorm();
      return -2.0 / q * Mat3::Identity() + 4.0 / (q * q) * d * d.transpose();
    }
    case GeometryKind::poincare_ball: {
      const double w = radius_ * radius_ - p.squaredNorm();
      return 2.0 / w * Mat3::Identity() + 4.0 / (w * w) * p * p.transpose();
    }
  }
  return Mat3::Zero();
}

Mat3 metric_at(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  return std::exp(2.0 * geom.f(p)) * Mat3::Identity();
}

Vec3 grad_f(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  return geom.grad_f(p);
}

Vec3 gradient_fd(const ScalarField& field, const Vec3& p, double h) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = h;
    g[i] = (field(p + e) - field(p - e)) / (2.0 * h);
  }
  return g;
}

Mat3 hessian_fd(const ScalarField& field, const Vec3& p, double h) {
  Mat3 m;
  const double f0 = field(p);
  for (int i = 0; i < 3; ++i) {
    Vec3 ei = Vec3::Zero();
    ei[i] = h;
    m(i, i) = (field(p + ei) - 2.0 * f0 + field(p - ei)) / (h * h);
    for (int j = i + 1; j < 3; ++j) {
      Vec3 ej = Vec3::Zero();
      ej[j] = h;
      const double v = (field(p + ei + ej) - field(p + ei - ej) - field(p - ei + ej) +
                        field(p - ei - ej)) /
                       (4.0 * h * h);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

Mat3 hessian_scalar(const AmbientGeometry& geom, const ScalarField& field, const Vec3& p) {
  geom.require(p);
  const double h = geom.fd_step(p);
  const Mat3 flat = hessian_fd(field, p, h);
  const Vec3 d = gradient_fd(field, p, h);
  const Christoffel gam = christoffels_at(geom, p);
  Mat3 out = flat;
  for (int k = 0; k < 3; ++k) out -= d[k] * gam[k];
  return out;
}

Christoffel christoffels_at(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  const Vec3 df = geom.grad_f(p);
  Christoffel gam;
  for (int k = 0; k < 3; ++k) {
    Mat3 m = -df[k] * Mat3::Identity();
    for (int j = 0; j < 3; ++j) {
      m(k, j) += df[j];
      m(j, k) += df[j];
    }
    gam[k] = m;
  }
  return gam;
}

Christoffel christoffels_fd(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  const double h = geom.fd_step(p);
  // dg[c](a, b) = partial_c g_ab
  std::array<Mat3, 3> dg;
  for (int c = 0; c < 3; ++c) {
    Vec3 e = Vec3::Zero();
    e[c] = h;
    dg[c] = (metric_at(geom, p + e) - metric_at(geom, p - e)) / (2.0 * h);
  }
  const Mat3 ginv = metric_at(geom, p).inverse();
  Christoffel gam;
  for (int k = 0; k < 3; ++k) {
    gam[k].setZero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
          gam[k](i, j) += 0.5 * ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  }
  return gam;
}

Mat3 ricci_at(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  if (geom.is_flat()) return Mat3::Zero();
  return geom.einstein_constant() * std::exp(2.0 * geom.f(p)) * Mat3::Identity();
}

Mat3 ricci_conformal(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  const Vec3 df = geom.grad_f(p);
  const Mat3 hf = geom.hess_f(p);
  return -(hf - df * df.transpose()) - (hf.trace() + df.squaredNorm()) * Mat3::Identity();
}

Mat3 ricci_fd(const AmbientGeometry& geom, const Vec3& p) {
  geom.require(p);
  const double h = geom.fd_step(p);
  // dgam[c][k](i, j) = partial_c of the symbol with upper index k
  std::array<Christoffel, 3> dgam;
  for (int c = 0; c < 3; ++c) {
    Vec3 e = Vec3::Zero();
    e[c] = h;
    const Christoffel plus = christoffels_at(geom, p + e);
    const Christoffel minus = christoffels_at(geom, p - e);
    for (int k = 0; k < 3; ++k) dgam[c][k] = (plus[k] - minus[k]) / (2.0 * h);
  }
  const Christoffel gam = christoffels_at(geom, p);
  Mat3 ric = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        v += dgam[k][k](i, j) - dgam[j][k](i, k);
        for (int l = 0; l < 3; ++l) v += gam[k](k, l) * gam[l](i, j) - gam[k](j, l) * gam[l](i, k);
      }
      ric(i, j) = v;
    }
  return ric;
}

Mat3 lie_derivative_metric(const AmbientGeometry& geom, const VectorField& X, const Vec3& p) {
  geom.require(p);
  const double h = geom.fd_step(p);
  // jac(k, i) = partial_i X^k
  Mat3 jac;
  std::array<Mat3, 3> dg;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = h;
    jac.col(i) = (X(p + e) - X(p - e)) / (2.0 * h);
    dg[i] = (metric_at(geom, p + e) - metric_at(geom, p - e)) / (2.0 * h);
  }
  const Vec3 x = X(p);
  const Mat3 g = metric_at(geom, p);
  Mat3 out = Mat3::Zero();
  for (int k = 0; k < 3; ++k) out += x[k] * dg[k];
  out += jac.transpose() * g + g * jac;
  return out;
}

}  // namespace ckflow

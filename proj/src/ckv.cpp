#include "ckflow/ckv.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "ckflow/errors.hpp"

namespace ckflow {

KillingPair::KillingPair(const Vec3& a, double w) : axis(a), omega(w) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw ConfigError("rotation axis must be nonzero");
  if (!(omega >= 0.0)) throw ConfigError("rotation omega must be non-negative");
  axis /= n;
}

Vec3 grad_phi(const AmbientGeometry& geom, const Vec3& p) {
  return geom.grad_f(p) + geom.hess_f(p) * p;
}

double eval_phi(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p) {
  geom.require(p);
  return 1.0 + pair.perp(p).dot(geom.grad_f(p));
}

double eval_lambda(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p) {
  const double phi = eval_phi(geom, pair, p);
  return std::exp(2.0 * geom.f(p)) * pair.perp(p).squaredNorm() / (phi * phi);
}

double eval_Lambda(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p) {
  const double phi = eval_phi(geom, pair, p);
  const double xphi = pair.perp(p).dot(grad_phi(geom, p));
  return (phi * phi - xphi) / (phi * phi * phi);
}

DerivedScalars derived_scalars(const AmbientGeometry& geom, const KillingPair& pair,
                               const Vec3& p) {
  return {eval_phi(geom, pair, p), eval_lambda(geom, pair, p), eval_Lambda(geom, pair, p)};
}

double perp_derivative_lambda(const AmbientGeometry& geom, const KillingPair& pair,
                              const Vec3& p) {
  return 2.0 * eval_Lambda(geom, pair, p) * std::exp(2.0 * geom.f(p)) *
         pair.perp(p).squaredNorm();
}

double eval_grad_lambda_check(const AmbientGeometry& geom, const KillingPair& pair,
                              const Vec3& p) {
  geom.require(p);
  const double h = geom.fd_step(p);
  const Vec3 fd =
      gradient_fd([&](const Vec3& q) { return eval_lambda(geom, pair, q); }, p, h);
  const Vec3 exact = 2.0 * eval_Lambda(geom, pair, p) * std::exp(2.0 * geom.f(p)) * pair.perp(p);
  return (fd - exact).norm() / (1.0 + fd.norm());
}

double lambda_of_radius(const AmbientGeometry& geom, const KillingPair& pair, double r) {
  return eval_lambda(geom, pair, Vec3(0.0, 0.0, r));
}

double lambda_radial_derivative(const AmbientGeometry& geom, const KillingPair& pair, double r) {
  // d lambda/dr = X_perp(lambda) / r
  return perp_derivative_lambda(geom, pair, Vec3(0.0, 0.0, r)) / r;
}

double radius_of_lambda(const AmbientGeometry& geom, const KillingPair& pair, double lambda) {
  (void)pair;
  if (!(lambda > 0.0)) throw DomainExit("leaf label must be positive");
  const double q = std::sqrt(lambda);
  double r = 0.0;
  switch (geom.kind()) {
    case GeometryKind::euclidean:
      r = q;
      break;
    case GeometryKind::paper_example:
      // q = r / (4 - r^2)
      r = 8.0 / (1.0 + std::sqrt(1.0 + 16.0 * lambda));
      r *= q;
      break;
    case GeometryKind::poincare_ball: {
      // q = 2 R r / (R^2 + r^2)
      if (!(lambda < 1.0)) throw DomainExit("leaf label outside the ball");
      const double R = geom.radius();
      r = R * q / (1.0 + std::sqrt(1.0 - lambda));
      break;
    }
  }
  return r;
}

double xi(double s) {
  if (s >= 1.0) return 0.0;
  if (s <= 0.0) return 1.0;
  return std::exp(-s * s / (1.0 - s * s));
}

double xi_prime(double s) {
  if (s >= 1.0 || s <= 0.0) return 0.0;
  const double d = 1.0 - s * s;
  return xi(s) * (-2.0 * s / (d * d));
}

double xi_sup_derivative() {
  static const double value = [] {
    const int n = 100000;
    double best = 0.0;
    for (int i = 0; i <= n; ++i) best = std::max(best, std::abs(xi_prime(double(i) / n)));
    return best;
  }();
  return value;
}

Shell shell_from_radii(const AmbientGeometry& geom, const KillingPair& pair, double r_min,
                       double r_max) {
  return {lambda_of_radius(geom, pair, r_min), lambda_of_radius(geom, pair, r_max)};
}

std::vector<Vec3> sphere_samples(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  const Mat3 rot = q.toRotationMatrix();
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * i;
    out.push_back(rot * Vec3(rho * std::cos(th), rho * std::sin(th), z));
  }
  return out;
}

namespace {

std::vector<double> shell_radii(const AmbientGeometry& geom, const KillingPair& pair,
                                const Shell& shell, int count) {
  if (!(shell.lambda_min > 0.0) || !(shell.lambda_max >= shell.lambda_min))
    throw DomainExit("empty or non-positive leaf shell");
  std::vector<double> radii;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.5 : double(i) / (count - 1);
    const double lam = shell.lambda_min + t * (shell.lambda_max - shell.lambda_min);
    const double r = radius_of_lambda(geom, pair, lam);
    geom.require(Vec3(0.0, 0.0, r));
    radii.push_back(r);
  }
  return radii;
}

}  // namespace

double estimate_T0(const AmbientGeometry& geom, const KillingPair& pair, const Shell& shell,
                   int n, double margin, const ShellSampling& sampling) {
  if (!(margin > 0.0 && margin < 1.0)) throw ScheduleInfeasible("margin must lie in (0, 1)");
  const auto radii = shell_radii(geom, pair, shell, sampling.spheres);
  double c = std::numeric_limits<double>::infinity();
  double M = 0.0;
  for (std::size_t s = 0; s < radii.size(); ++s) {
    for (const Vec3& q : sphere_samples(sampling.points_per_sphere, sampling.seed + s)) {
      const Vec3 p = radii[s] * q;
      const DerivedScalars d = derived_scalars(geom, pair, p);
      const double val = d.Lambda * d.phi * d.phi * d.phi - pair.top(p).dot(grad_phi(geom, p));
      c = std::min(c, val);
      M = std::max(M, std::exp(geom.f(p)) * pair.top(p).norm());
    }
  }
  if (!(c > 0.0)) throw ScheduleInfeasible("Lambda phi^3 - X_top(phi) is not positive on the shell");
  if (M == 0.0) return 1.0;
  return xi_sup_derivative() * M / (n * c * (1.0 - margin));
}

bool AssumptionReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.pass; });
}

std::string AssumptionReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(6) << "cond" << std::setw(34) << "check" << std::setw(16)
     << "residual" << std::setw(12) << "tolerance" << "result\n";
  for (const auto& c : conditions) {
    os << std::setw(6) << c.label.substr(0, c.label.find(' ')) << std::setw(34)
       << c.label.substr(c.label.find(' ') + 1) << std::setw(16) << std::setprecision(6)
       << c.residual << std::setw(12) << c.tolerance << (c.pass ? "PASS" : "FAIL") << "\n";
  }
  return os.str();
}

namespace {

struct Worst {
  double value = -std::numeric_limits<double>::infinity();
  Vec3 point = Vec3::Zero();
  void offer(double v, const Vec3& p) {
    if (v > value) {
      value = v;
      point = p;
    }
  }
};

double ricci_extremal_gap(const Mat3& ric_over_g, const Vec3& dir) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(ric_over_g);
  const Vec3 n = dir.normalized();
  return n.dot(ric_over_g * n) - es.eigenvalues().minCoeff();
}

}  // namespace

AssumptionReport verify_assumptions(const AmbientGeometry& geom, const KillingPair& pair,
                                    const Shell& shell, int n_samples, double tol,
                                    std::uint64_t seed) {
  const int spheres = std::clamp(n_samples / 50, 2, 32);
  const int per_sphere = std::max(2, n_samples / spheres);
  const auto radii = shell_radii(geom, pair, shell, spheres);

  std::array<Worst, 10> w;
  const VectorField full = [&](const Vec3& q) { return pair.field(q, 1.0); };
  const VectorField rot = [&](const Vec3& q) { return pair.top(q); };
  const auto cotop = [&](const Vec3& q) -> Vec3 {
    return std::exp(2.0 * geom.f(q)) * pair.top(q);
  };

  for (std::size_t s = 0; s < radii.size(); ++s) {
    std::vector<double> lams;
    const auto dirs = sphere_samples(per_sphere, seed + 7919 * s);
    for (const Vec3& q : dirs) {
      const Vec3 p = radii[s] * q;
      const double e2f = std::exp(2.0 * geom.f(p));
      const double gnorm = 1.0 + e2f;
      const DerivedScalars d = derived_scalars(geom, pair, p);
      lams.push_back(d.lambda);

      const Mat3 g = metric_at(geom, p);
      const Mat3 lie = lie_derivative_metric(geom, full, p) - 2.0 * d.phi * g;
      w[0].offer(lie.cwiseAbs().maxCoeff() / gnorm, p);

      w[1].offer(-std::min(d.phi, std::sqrt(e2f) * pair.perp(p).norm()), p);

      const double u = std::sqrt(e2f) * pair.field(p, 1.0).dot(q);
      w[2].offer(-u, p);

      w[4].offer(-d.Lambda, p);
      w[5].offer(-(d.Lambda * d.phi * d.phi * d.phi - pair.top(p).dot(grad_phi(geom, p))), p);

      const Mat3 kil = lie_derivative_metric(geom, rot, p);
      w[6].offer(kil.cwiseAbs().maxCoeff() / gnorm, p);

      const double h = geom.fd_step(p);
      Mat3 jac;
      for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Zero();
        e[i] = h;
        jac.col(i) = (cotop(p + e) - cotop(p - e)) / (2.0 * h);
      }
      const Vec3 curl(jac(2, 1) - jac(1, 2), jac(0, 2) - jac(2, 0), jac(1, 0) - jac(0, 1));
      const Vec3 wv = cotop(p);
      w[7].offer(std::abs(wv.dot(curl)) / (1.0 + wv.norm() * curl.norm()), p);

      const Mat3 ric = ricci_at(geom, p) / e2f;
      const double rscale = 1.0 + ric.cwiseAbs().maxCoeff();
      w[8].offer(ricci_extremal_gap(ric, pair.perp(p)) / rscale, p);
      if (pair.top(p).norm() > 1e-12 * p.norm())
        w[9].offer(ricci_extremal_gap(ric, pair.top(p)) / rscale, p);
      else
        w[9].offer(0.0, p);
    }
    double mean = 0.0;
    for (double l : lams) mean += l;
    mean /= lams.size();
    double var = 0.0;
    for (double l : lams) var += (l - mean) * (l - mean);
    w[3].offer(std::sqrt(var / lams.size()) / mean, radii[s] * dirs.front());
  }

  static const std::array<const char*, 10> labels = {
      "i conformal Killing residual",  "ii phi and |X_perp| positive",
      "iii leaf support positive",     "iv lambda constant on leaves",
      "v Lambda positive",             "vi Lambda phi^3 - X_top(phi) > 0",
      "vii X_top Killing residual",    "viii X_top integrability",
      "ix X_perp least Ricci",         "x X_top least Ricci"};
  static const std::array<bool, 10> sign_check = {false, true,  true,  false, true,
                                                  true,  false, false, false, false};
  AssumptionReport rep;
  for (int i = 0; i < 10; ++i) {
    auto& c = rep.conditions[i];
    c.label = labels[i];
    c.residual = w[i].value;
    c.worst_point = w[i].point;
    c.tolerance = sign_check[i] ? 0.0 : tol;
    c.pass = c.residual <= c.tolerance;
  }
  return rep;
}

}  // namespace ckflow

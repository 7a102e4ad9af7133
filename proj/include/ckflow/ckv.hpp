#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ckflow/ambient.hpp"

namespace ckflow {

// Dilation field X_perp = position, rotation field X_top = omega * (axis x position).
struct KillingPair {
  Vec3 axis{1.0, 0.0, 0.0};
  double omega = 1.0;

  KillingPair() = default;
  KillingPair(const Vec3& a, double w);

  Vec3 perp(const Vec3& p) const { return p; }
  Vec3 top(const Vec3& p) const { return omega * axis.cross(p); }
  // X(t) with the cutoff already evaluated
  Vec3 field(const Vec3& p, double xi_now) const { return p + xi_now * top(p); }
};

struct DerivedScalars {
  double phi = 0.0;
  double lambda = 0.0;
  double Lambda = 0.0;
};

double eval_phi(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p);
double eval_lambda(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p);
double eval_Lambda(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p);
DerivedScalars derived_scalars(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p);
// |grad(lambda)_fd - 2 Lambda X_perp_flat| / (1 + |grad(lambda)_fd|)
double eval_grad_lambda_check(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p);

// flat gradient of phi (closed form)
Vec3 grad_phi(const AmbientGeometry& geom, const Vec3& p);
// X_perp(lambda) = 2 Lambda |X_perp|_g^2
double perp_derivative_lambda(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& p);

// lambda depends on |p| only for every built-in geometry
double lambda_of_radius(const AmbientGeometry& geom, const KillingPair& pair, double r);
double radius_of_lambda(const AmbientGeometry& geom, const KillingPair& pair, double lambda);
// d lambda / d r along a ray
double lambda_radial_derivative(const AmbientGeometry& geom, const KillingPair& pair, double r);

double xi(double s);
double xi_prime(double s);
double xi_sup_derivative();

struct Schedule {
  double t0 = 1.0;
  double margin = 0.1;
  bool enabled = true;  // false means the cutoff is identically zero

  double at(double t) const { return enabled ? xi(t / t0) : 0.0; }
  double rate(double t) const { return enabled ? xi_prime(t / t0) / t0 : 0.0; }
};

struct Shell {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

Shell shell_from_radii(const AmbientGeometry& geom, const KillingPair& pair, double r_min,
                       double r_max);

// Fibonacci lattice on the unit sphere, rotated by a seeded random offset
std::vector<Vec3> sphere_samples(int count, std::uint64_t seed);

struct ShellSampling {
  int spheres = 32;
  int points_per_sphere = 1000;
  std::uint64_t seed = 1;
};

double estimate_T0(const AmbientGeometry& geom, const KillingPair& pair, const Shell& shell,
                   int n = 2, double margin = 0.1, const ShellSampling& sampling = {});

struct ConditionResult {
  std::string label;
  double residual = 0.0;
  Vec3 worst_point = Vec3::Zero();
  double tolerance = 0.0;
  bool pass = false;
};

struct AssumptionReport {
  std::array<ConditionResult, 10> conditions;
  bool all_pass() const;
  std::string table() const;
};

// Sign conditions report residual = -(smallest sampled value) against tolerance 0, so a
// negative residual means the strict inequality holds with that margin.
AssumptionReport verify_assumptions(const AmbientGeometry& geom, const KillingPair& pair,
                                    const Shell& shell, int n_samples, double tol = 1e-5,
                                    std::uint64_t seed = 1);

}  // namespace ckflow

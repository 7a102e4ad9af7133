#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"
#include "ckflow/surface.hpp"

namespace ckflow {

struct TraceRow {
  long step = 0;
  double time = 0.0;
  double xi = 0.0;
  double area = 0.0;
  double volume = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double u_min = 0.0;
  double uperp_min = 0.0;
  double H_min = 0.0;
  double H_max = 0.0;
  double mink1 = 0.0;
  double mink2 = 0.0;
  double umbilicity = 0.0;
  double leaf_distance = 0.0;
  double dt = 0.0;
  // not part of the CSV schema
  double max_speed = 0.0;
  double uperp_criterion = 0.0;
};

struct FlowTrace {
  std::vector<TraceRow> rows;
  bool converged = false;

  static const char* csv_header();
  void write_csv(std::ostream& os) const;
};

// all per-row monitors for one snapshot
TraceRow measure(const TriSurface& mesh, const AmbientGeometry& geom, const KillingPair& pair,
                 double xi_now, int n = 2);
TraceRow measure(const TriSurface& mesh, const std::vector<VertexGeometry>& vg,
                 const AmbientGeometry& geom, const KillingPair& pair, double xi_now, int n = 2);

double minkowski1_residual(const std::vector<VertexGeometry>& vg, int n = 2);
double minkowski1_residual(const TriSurface& mesh, const AmbientGeometry& geom,
                           const KillingPair& pair, double xi_now, int n = 2);

struct MinkowskiSides {
  double lhs = 0.0;    // integral of H (n phi - H u)
  double rhs = 0.0;    // Ricci term minus umbilicity term
  double scale = 0.0;  // integral of H^2 u
  double relative() const;  // |lhs - rhs| / max(|lhs|, |rhs|, scale)
};
MinkowskiSides minkowski2_sides(const std::vector<VertexGeometry>& vg,
                                const AmbientGeometry& geom, const KillingPair& pair,
                                int n = 2);
double minkowski2_residual(const TriSurface& mesh, const AmbientGeometry& geom,
                           const KillingPair& pair, double xi_now, int n = 2);

double umbilicity_deficit(const std::vector<VertexGeometry>& vg);
double umbilicity_deficit(const TriSurface& mesh, const AmbientGeometry& geom,
                          const KillingPair& pair);
double leaf_distance(const std::vector<VertexGeometry>& vg);
double leaf_distance(const TriSurface& mesh, const KillingPair& pair, const AmbientGeometry& geom);
// max |u_perp - |X_perp|_g| / |X_perp|_g
double uperp_criterion(const std::vector<VertexGeometry>& vg, const AmbientGeometry& geom,
                       const KillingPair& pair);

struct LeafProfile {
  std::vector<double> r;
  std::vector<double> area;
  std::vector<double> volume;
};

// area of the coordinate sphere S(r) and volume of the ball B(r, 0)
double leaf_area(const AmbientGeometry& geom, double r);
double leaf_volume(const AmbientGeometry& geom, double r);
LeafProfile leaf_profile(const AmbientGeometry& geom, const KillingPair& pair,
                         const std::vector<double>& r_grid);

struct IsoperimetricVerdict {
  double r1 = 0.0;
  double area_leaf = 0.0;
  double area_initial = 0.0;
  double area_final = 0.0;
  double volume_initial = 0.0;
  bool pass = false;
  bool equality = false;  // A(S(r1)) agrees with A(initial) within tolerance
};

IsoperimetricVerdict isoperimetric_check(const FlowTrace& trace, const LeafProfile& profile,
                                         const AmbientGeometry& geom, double tol = 5e-3);

struct GrowthFit {
  double a = 0.0;
  double b = 0.0;
  bool pass = false;
};
GrowthFit h_growth_fit(const FlowTrace& trace);

}  // namespace ckflow

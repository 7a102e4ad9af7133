#pragma once

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"
#include "ckflow/flow.hpp"
#include "ckflow/graph.hpp"
#include "ckflow/surface.hpp"

namespace ckflow {

// Pointwise data entering the right-hand sides; normal is the flat unit normal.
struct SurfacePoint {
  Vec3 x = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  double u_perp = 0.0;
  double u_top = 0.0;
  double u = 0.0;
};

SurfacePoint surface_point(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& x,
                           const Vec3& normal, double xi_now);

// X_perp(Lambda phi^2) by a central difference along the dilation
double perp_derivative_Lambda_phi2(const AmbientGeometry& geom, const KillingPair& pair,
                                   const Vec3& x);

// B in  d_t lambda - u Lap lambda = B  (derivative along the normal trajectory)
double lambda_source(const AmbientGeometry& geom, const KillingPair& pair, const SurfacePoint& s,
                     double xi_now, int n = 2);

// Relative residuals |LHS - RHS|_L2 / max(|d_t Q|, |u Lap Q|, |RHS|) over one time step.
// Time derivatives follow each vertex and are corrected by the tangential part of its motion.
struct EvolutionResiduals {
  double lambda = 0.0;
  double u = 0.0;
  double H = 0.0;
};

EvolutionResiduals evolution_residuals(const TriSurface& before, const TriSurface& after,
                                       double t_before, double dt, const Schedule& schedule,
                                       const AmbientGeometry& geom, const KillingPair& pair,
                                       int n = 2);

// Same residuals for two graph states, evaluated on smooth least-squares fits of lambda so
// that curvature derivatives are taken on a smooth surface rather than on mesh noise.
EvolutionResiduals graph_evolution_residuals(const LeafGraph& graph, const GraphState& before,
                                             const GraphState& after,
                                             const AmbientGeometry& geom,
                                             const KillingPair& pair, int n = 2,
                                             int degree = 10);

}  // namespace ckflow

#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"
#include "ckflow/diagnostics.hpp"
#include "ckflow/flow.hpp"
#include "ckflow/surface.hpp"

namespace ckflow {

// Leaf chart x = r(lambda) p over the unit sphere: g = G |dp|^2 + H_coef dlambda^2.
struct LeafCoefficients {
  double G = 0.0;
  double H_coef = 0.0;
  double rho() const { return H_coef / G; }
};

LeafCoefficients leaf_coefficients(const AmbientGeometry& geom, const KillingPair& pair,
                                   const Vec3& direction, double lambda);

// A(p) = sqrt(G^(n-2) / (1 + rho |p|^2)) p in an orthonormal leaf frame
Eigen::Vector2d graph_flux(const LeafCoefficients& c, const Eigen::Vector2d& p, int n = 2);
Eigen::Matrix2d graph_flux_jacobian(const LeafCoefficients& c, const Eigen::Vector2d& p,
                                    int n = 2);
Eigen::Vector2d graph_flux(const AmbientGeometry& geom, const KillingPair& pair,
                           const Vec3& direction, double lambda, const Eigen::Vector2d& p,
                           int n = 2);

struct EllipticityBounds {
  double c2 = 0.0;
  double c3 = 0.0;
};

// extreme Jacobian eigenvalues over |p| <= c1; throws EllipticityLost when c2 <= 0
EllipticityBounds ellipticity_bounds(const LeafCoefficients& c, double c1, int n = 2,
                                     int radial_samples = 65);
EllipticityBounds ellipticity_bounds(const AmbientGeometry& geom, const KillingPair& pair,
                                     const Shell& shell, double c1, int n = 2,
                                     const ShellSampling& sampling = {8, 200, 1});

// Fixed leaf mesh (unit icosphere) with P1 operators.
class LeafGraph {
 public:
  explicit LeafGraph(int level);

  const TriSurface& leaf() const { return leaf_; }
  const std::vector<Vec3>& directions() const { return leaf_.vertices(); }
  std::size_t size() const { return leaf_.num_vertices(); }
  // lumped mass: each node gets a third of the area of its incident faces
  const std::vector<double>& mass() const { return mass_; }
  const std::vector<double>& face_areas() const { return face_area_; }
  double min_edge_length() const { return h_min_; }

  // constant gradient of the linear interpolant on each face
  std::vector<Vec3> face_gradients(const std::vector<double>& values) const;
  // gradient of a quadratic least-squares fit over the 2-ring of each node
  std::vector<Vec3> node_gradients(const std::vector<double>& values) const;
  // -(1/M_i) sum_T area_T A_T . grad(basis_i) for per-face flux vectors
  std::vector<double> divergence(const std::vector<Vec3>& face_flux) const;
  // gradient of the basis function of local vertex k on face t
  const Vec3& basis_gradient(int t, int k) const { return basis_grad_[3 * t + k]; }

  // radial graph surface with the leaf connectivity
  TriSurface surface(const std::vector<double>& lambda, const AmbientGeometry& geom,
                     const KillingPair& pair) const;
  // lambda of a radially graphical surface along each leaf direction
  std::vector<double> sample(const TriSurface& surface, const AmbientGeometry& geom,
                             const KillingPair& pair) const;
  // linear interpolation of node values at an arbitrary direction
  double interpolate(const std::vector<double>& values, const Vec3& direction) const;

 private:
  TriSurface leaf_;
  std::vector<double> mass_;
  std::vector<double> face_area_;
  std::vector<Vec3> basis_grad_;
  std::vector<LocalFit> fits_;
  double h_min_ = 0.0;
};

// Least-squares fit of node values by the homogeneous polynomials of degree L and L - 1,
// which span the spherical harmonics of degree <= L on the unit sphere.
class SphericalFit {
 public:
  SphericalFit(const std::vector<Vec3>& directions, const std::vector<double>& values,
               int degree);
  double operator()(const Vec3& direction) const;
  int degree() const { return degree_; }

 private:
  int degree_;
  std::vector<std::array<int, 3>> exponents_;
  Eigen::VectorXd coeffs_;
};

struct GraphState {
  double t = 0.0;
  std::vector<double> lambda;
  Schedule schedule;
  long step = 0;
};

// per-node quantities of the graph surface
struct GraphNode {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // flat unit normal
  Vec3 gradient = Vec3::Zero();  // leaf gradient of lambda, tangent to the unit sphere
  LeafCoefficients coef;
  double u_perp = 0.0;
  double u_top = 0.0;
  double u = 0.0;
  double laplacian = 0.0;  // Laplace-Beltrami of lambda on the graph
  double source = 0.0;  // right-hand side B of the lambda equation
  double rate = 0.0;  // d lambda / dt at fixed direction
};

std::vector<GraphNode> graph_nodes(const LeafGraph& graph, const std::vector<double>& lambda,
                                   const AmbientGeometry& geom, const KillingPair& pair,
                                   double xi_now, int n = 2);

// largest leaf gradient magnitude compatible with u >= u_floor on the band
double graph_gradient_bound(const AmbientGeometry& geom, const KillingPair& pair,
                            const Shell& band, double u_floor);

double graph_stable_dt(const LeafGraph& graph, const std::vector<GraphNode>& nodes,
                       const StepControl& control);

// Heun step of the radial graph equation; throws GradientBoundExceeded when a node
// gradient exceeds c1 and StarshapeLost when min u <= 0
GraphState step_graph(const LeafGraph& graph, const GraphState& state,
                      const AmbientGeometry& geom, const KillingPair& pair, double dt,
                      double c1, int n = 2);

class GraphRun {
 public:
  GraphRun(AmbientGeometry geom, KillingPair pair, int level, GraphState initial,
           StepControl control, int n = 2);

  bool run(const RunObserver& observer = {});
  // advance to exactly time t (the last step is shortened)
  void advance_to(double t);

  const LeafGraph& graph() const { return graph_; }
  const GraphState& state() const { return state_; }
  const FlowTrace& trace() const { return trace_; }
  double gradient_bound() const { return c1_; }
  const EllipticityBounds& ellipticity() const { return ellipticity_; }
  TriSurface surface() const { return graph_.surface(state_.lambda, geom_, pair_); }
  double band_excursion() const { return band_excursion_; }

 private:
  void record(double dt);
  void single_step(double dt);

  AmbientGeometry geom_;
  KillingPair pair_;
  LeafGraph graph_;
  GraphState state_;
  StepControl control_;
  int n_;
  FlowTrace trace_;
  Shell band_;
  double c1_ = 0.0;
  EllipticityBounds ellipticity_;
  double band_excursion_ = 0.0;
};

}  // namespace ckflow

#include "ckflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ckflow/errors.hpp"
#include "ckflow/evolution.hpp"

namespace ckflow {

namespace {

double flux_scale(const LeafCoefficients& c, double p2, int n) {
  return std::sqrt(std::pow(c.G, n - 2) / (1.0 + c.rho() * p2));
}

// ray from the origin along d hits face (a, b, c); returns barycentric weights when it does
bool ray_hits(const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c, Vec3& w) {
  Mat3 m;
  m.col(0) = a;
  m.col(1) = b;
  m.col(2) = c;
  const Vec3 s = m.partialPivLu().solve(d);
  const double tol = -1e-12 * s.cwiseAbs().sum();
  if (s.minCoeff() < tol || s.sum() <= 0.0) return false;
  w = s / s.sum();
  return true;
}

}  // namespace

LeafCoefficients leaf_coefficients(const AmbientGeometry& geom, const KillingPair& pair,
                                   const Vec3& direction, double lambda) {
  const Vec3 d = direction.normalized();
  const double r = radius_of_lambda(geom, pair, lambda);
  const Vec3 x = r * d;
  geom.require(x);
  const double e2f = std::exp(2.0 * geom.f(x));
  const double dl_dr = perp_derivative_lambda(geom, pair, x) / r;
  return {e2f * r * r, e2f / (dl_dr * dl_dr)};
}

Eigen::Vector2d graph_flux(const LeafCoefficients& c, const Eigen::Vector2d& p, int n) {
  return flux_scale(c, p.squaredNorm(), n) * p;
}

Eigen::Matrix2d graph_flux_jacobian(const LeafCoefficients& c, const Eigen::Vector2d& p, int n) {
  const double p2 = p.squaredNorm();
  const double s = flux_scale(c, p2, n);
  return s * (Eigen::Matrix2d::Identity() - c.rho() * p * p.transpose() / (1.0 + c.rho() * p2));
}

Eigen::Vector2d graph_flux(const AmbientGeometry& geom, const KillingPair& pair,
                           const Vec3& direction, double lambda, const Eigen::Vector2d& p,
                           int n) {
  return graph_flux(leaf_coefficients(geom, pair, direction, lambda), p, n);
}

EllipticityBounds ellipticity_bounds(const LeafCoefficients& c, double c1, int n,
                                     int radial_samples) {
  if (!(c1 > 0.0)) throw ConfigError("gradient bound c1 must be positive");
  EllipticityBounds b{std::numeric_limits<double>::infinity(), 0.0};
  const int m = std::max(radial_samples, 2);
  for (int k = 0; k < m; ++k) {
    const double mag = c1 * k / (m - 1);
    const Eigen::Matrix2d J = graph_flux_jacobian(c, Eigen::Vector2d(mag, 0.0), n);
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(J).eigenvalues();
    b.c2 = std::min(b.c2, ev.minCoeff());
    b.c3 = std::max(b.c3, ev.maxCoeff());
  }
  if (!(b.c2 > 0.0)) throw EllipticityLost("flux Jacobian is not positive definite");
  return b;
}

EllipticityBounds ellipticity_bounds(const AmbientGeometry& geom, const KillingPair& pair,
                                     const Shell& shell, double c1, int n,
                                     const ShellSampling& sampling) {
  EllipticityBounds b{std::numeric_limits<double>::infinity(), 0.0};
  const int levels = std::max(sampling.spheres, 2);
  for (int s = 0; s < levels; ++s) {
    const double lam =
        shell.lambda_min + (shell.lambda_max - shell.lambda_min) * s / (levels - 1);
    for (const Vec3& d : sphere_samples(sampling.points_per_sphere, sampling.seed + s)) {
      const EllipticityBounds local = ellipticity_bounds(leaf_coefficients(geom, pair, d, lam), c1, n);
      b.c2 = std::min(b.c2, local.c2);
      b.c3 = std::max(b.c3, local.c3);
    }
  }
  return b;
}

LeafGraph::LeafGraph(int level) : leaf_(icosphere(level)) {
  const auto& x = leaf_.vertices();
  const auto& faces = leaf_.faces();
  mass_.assign(x.size(), 0.0);
  face_area_.resize(faces.size());
  basis_grad_.resize(3 * faces.size());
  for (std::size_t t = 0; t < faces.size(); ++t) {
    const Face& f = faces[t];
    const Vec3 cr = (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]);
    const double a = 0.5 * cr.norm();
    const Vec3 nrm = cr.normalized();
    face_area_[t] = a;
    for (int k = 0; k < 3; ++k) {
      const Vec3 e = x[f[(k + 2) % 3]] - x[f[(k + 1) % 3]];
      basis_grad_[3 * t + k] = nrm.cross(e) / (2.0 * a);
      mass_[f[k]] += a / 3.0;
    }
  }
  h_min_ = leaf_.min_edge_length();
  fits_ = local_fits(leaf_, leaf_.vertices(), true);
}

std::vector<Vec3> LeafGraph::face_gradients(const std::vector<double>& values) const {
  const auto& faces = leaf_.faces();
  std::vector<Vec3> g(faces.size(), Vec3::Zero());
  for (std::size_t t = 0; t < faces.size(); ++t)
    for (int k = 0; k < 3; ++k) g[t] += values[faces[t][k]] * basis_grad_[3 * t + k];
  return g;
}

std::vector<Vec3> LeafGraph::node_gradients(const std::vector<double>& values) const {
  std::vector<Vec3> g(size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = scalar_jet(fits_[i], static_cast<int>(i), values).gradient;
  return g;
}

std::vector<double> LeafGraph::divergence(const std::vector<Vec3>& face_flux) const {
  const auto& faces = leaf_.faces();
  std::vector<double> div(size(), 0.0);
  for (std::size_t t = 0; t < faces.size(); ++t)
    for (int k = 0; k < 3; ++k)
      div[faces[t][k]] -= face_area_[t] * face_flux[t].dot(basis_grad_[3 * t + k]);
  for (std::size_t i = 0; i < div.size(); ++i) div[i] /= mass_[i];
  return div;
}

TriSurface LeafGraph::surface(const std::vector<double>& lambda, const AmbientGeometry& geom,
                              const KillingPair& pair) const {
  std::vector<Vec3> x(size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = radius_of_lambda(geom, pair, lambda[i]) * directions()[i];
  return TriSurface(std::move(x), leaf_.faces());
}

std::vector<double> LeafGraph::sample(const TriSurface& surface, const AmbientGeometry& geom,
                                      const KillingPair& pair) const {
  const auto& x = surface.vertices();
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const Vec3& d = directions()[i];
    bool found = false;
    for (const Face& f : surface.faces()) {
      Vec3 w;
      if (!ray_hits(d, x[f[0]], x[f[1]], x[f[2]], w)) continue;
      const Vec3 p = w[0] * x[f[0]] + w[1] * x[f[1]] + w[2] * x[f[2]];
      out[i] = eval_lambda(geom, pair, p.norm() * d);
      found = true;
      break;
    }
    if (!found) throw InvariantViolation("surface is not radially graphical");
  }
  return out;
}

double LeafGraph::interpolate(const std::vector<double>& values, const Vec3& direction) const {
  const auto& d = directions();
  for (const Face& f : leaf_.faces()) {
    Vec3 w;
    if (ray_hits(direction, d[f[0]], d[f[1]], d[f[2]], w))
      return w[0] * values[f[0]] + w[1] * values[f[1]] + w[2] * values[f[2]];
  }
  throw InvariantViolation("direction not covered by the leaf mesh");
}

namespace {

std::vector<std::array<int, 3>> sphere_exponents(int degree) {
  std::vector<std::array<int, 3>> e;
  for (int d : {degree, degree - 1}) {
    if (d < 0) continue;
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) e.push_back({a, b, d - a - b});
  }
  return e;
}

void monomials(const std::vector<std::array<int, 3>>& ex, int degree, const Vec3& p,
               double* out) {
  std::array<std::array<double, 32>, 3> pw;
  for (int k = 0; k < 3; ++k) {
    pw[k][0] = 1.0;
    for (int j = 1; j <= degree; ++j) pw[k][j] = pw[k][j - 1] * p[k];
  }
  for (std::size_t i = 0; i < ex.size(); ++i)
    out[i] = pw[0][ex[i][0]] * pw[1][ex[i][1]] * pw[2][ex[i][2]];
}

}  // namespace

SphericalFit::SphericalFit(const std::vector<Vec3>& directions, const std::vector<double>& values,
                           int degree)
    : degree_(degree), exponents_(sphere_exponents(degree)) {
  if (degree < 0 || degree > 30) throw ConfigError("fit degree must lie in [0, 30]");
  const Eigen::Index m = static_cast<Eigen::Index>(directions.size());
  const Eigen::Index k = static_cast<Eigen::Index>(exponents_.size());
  if (m < k) throw InvariantViolation("too few nodes for the requested fit degree");
  Eigen::MatrixXd A(m, k);
  Eigen::VectorXd b(m);
  std::vector<double> row(exponents_.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    monomials(exponents_, degree_, directions[i].normalized(), row.data());
    for (Eigen::Index j = 0; j < k; ++j) A(i, j) = row[j];
    b[i] = values[i];
  }
  coeffs_ = A.colPivHouseholderQr().solve(b);
}

double SphericalFit::operator()(const Vec3& direction) const {
  std::vector<double> row(exponents_.size());
  monomials(exponents_, degree_, direction.normalized(), row.data());
  return Eigen::Map<const Eigen::VectorXd>(row.data(), coeffs_.size()).dot(coeffs_);
}

std::vector<GraphNode> graph_nodes(const LeafGraph& graph, const std::vector<double>& lambda,
                                   const AmbientGeometry& geom, const KillingPair& pair,
                                   double xi_now, int n) {
  const std::size_t m = graph.size();
  const auto& dirs = graph.directions();
  const auto& faces = graph.leaf().faces();
  std::vector<GraphNode> nodes(m);
  const auto grads = graph.node_gradients(lambda);
  for (std::size_t i = 0; i < m; ++i) {
    GraphNode& g = nodes[i];
    const double r = radius_of_lambda(geom, pair, lambda[i]);
    g.position = r * dirs[i];
    geom.require(g.position);
    g.gradient = grads[i];
    g.coef = leaf_coefficients(geom, pair, dirs[i], lambda[i]);
    const double dl_dr = perp_derivative_lambda(geom, pair, g.position) / r;
    g.normal = (dl_dr * dirs[i] - g.gradient / r).normalized();
    const SurfacePoint s = surface_point(geom, pair, g.position, g.normal, xi_now);
    g.u_perp = s.u_perp;
    g.u_top = s.u_top;
    g.u = s.u;
    g.source = lambda_source(geom, pair, s, xi_now, n);
  }

  const auto fg = graph.face_gradients(lambda);
  std::vector<Vec3> flux(faces.size());
  for (std::size_t t = 0; t < faces.size(); ++t) {
    const Face& f = faces[t];
    const Vec3 c = dirs[f[0]] + dirs[f[1]] + dirs[f[2]];
    const double lam = (lambda[f[0]] + lambda[f[1]] + lambda[f[2]]) / 3.0;
    const LeafCoefficients coef = leaf_coefficients(geom, pair, c, lam);
    flux[t] = flux_scale(coef, fg[t].squaredNorm(), n) * fg[t];
  }
  const auto div = graph.divergence(flux);
  for (std::size_t i = 0; i < m; ++i) {
    GraphNode& g = nodes[i];
    const double q = 1.0 + g.coef.rho() * g.gradient.squaredNorm();
    g.laplacian = div[i] / (std::pow(g.coef.G, 0.5 * n) * std::sqrt(q));
    // the normal-trajectory rate seen at a fixed leaf direction
    g.rate = q * (g.u * g.laplacian + g.source);
  }
  return nodes;
}

double graph_gradient_bound(const AmbientGeometry& geom, const KillingPair& pair,
                            const Shell& band, double u_floor) {
  if (!(u_floor > 0.0)) throw ConfigError("support floor must be positive");
  double bound = std::numeric_limits<double>::infinity();
  const int levels = 16;
  for (int s = 0; s < levels; ++s) {
    const double lam = band.lambda_min + (band.lambda_max - band.lambda_min) * s / (levels - 1);
    const double r = radius_of_lambda(geom, pair, lam);
    for (const Vec3& d : sphere_samples(200, 7 + s)) {
      const Vec3 x = r * d;
      const LeafCoefficients c = leaf_coefficients(geom, pair, d, lam);
      const double xl = perp_derivative_lambda(geom, pair, x);
      const double q = xl / u_floor;
      bound = std::min(bound, c.G * (q * q - 1.0 / c.H_coef));
    }
  }
  if (!(bound > 0.0)) throw GradientBoundExceeded("support floor exceeds the leaf support");
  return std::sqrt(bound);
}

double graph_stable_dt(const LeafGraph& graph, const std::vector<GraphNode>& nodes,
                       const StepControl& control) {
  double d = 0.0;
  for (const GraphNode& g : nodes) {
    const double q = 1.0 + g.coef.rho() * g.gradient.squaredNorm();
    d = std::max(d, std::abs(g.u) * std::sqrt(q) / g.coef.G);
  }
  const double h = graph.min_edge_length();
  if (d <= 0.0) return control.dt_max;
  return std::min(control.dt_max, control.cfl * h * h / d);
}

namespace {

void check_nodes(const std::vector<GraphNode>& nodes, double c1, double xi_now) {
  double umin = std::numeric_limits<double>::infinity();
  double gmax = 0.0;
  for (const GraphNode& g : nodes) {
    umin = std::min(umin, g.u);
    gmax = std::max(gmax, g.gradient.norm());
  }
  if (gmax > c1) {
    std::ostringstream os;
    os << "leaf gradient " << gmax << " exceeds the bound " << c1;
    throw GradientBoundExceeded(os.str());
  }
  if (!(umin > 0.0)) {
    std::ostringstream os;
    os << "strict starshapedness lost: min u = " << umin << " (xi = " << xi_now << ")";
    throw StarshapeLost(os.str());
  }
}

}  // namespace

GraphState step_graph(const LeafGraph& graph, const GraphState& state,
                      const AmbientGeometry& geom, const KillingPair& pair, double dt, double c1,
                      int n) {
  if (!(dt > 0.0)) throw InvariantViolation("time step must be positive");
  const double xi0 = state.schedule.at(state.t);
  const auto k1 = graph_nodes(graph, state.lambda, geom, pair, xi0, n);
  check_nodes(k1, c1, xi0);
  std::vector<double> mid = state.lambda;
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] += dt * k1[i].rate;
  const double xi1 = state.schedule.at(state.t + dt);
  const auto k2 = graph_nodes(graph, mid, geom, pair, xi1, n);

  GraphState next = state;
  next.t = state.t + dt;
  next.step = state.step + 1;
  for (std::size_t i = 0; i < mid.size(); ++i)
    next.lambda[i] = state.lambda[i] + 0.5 * dt * (k1[i].rate + k2[i].rate);
  check_nodes(graph_nodes(graph, next.lambda, geom, pair, xi1, n), c1, xi1);
  return next;
}

GraphRun::GraphRun(AmbientGeometry geom, KillingPair pair, int level, GraphState initial,
                   StepControl control, int n)
    : geom_(std::move(geom)),
      pair_(pair),
      graph_(level),
      state_(std::move(initial)),
      control_(control),
      n_(n) {
  control_.validate();
  if (state_.lambda.size() != graph_.size())
    throw InvariantViolation("graph state does not match the leaf mesh");
  const auto [lo, hi] = std::minmax_element(state_.lambda.begin(), state_.lambda.end());
  band_ = {*lo, *hi};
  const auto nodes = graph_nodes(graph_, state_.lambda, geom_, pair_, 0.0, n_);
  double uperp = std::numeric_limits<double>::infinity();
  for (const GraphNode& g : nodes) uperp = std::min(uperp, g.u_perp);
  if (!(uperp > 0.0)) throw StarshapeLost("graph seed is not radially graphical");
  c1_ = graph_gradient_bound(geom_, pair_, band_, 0.5 * uperp);
  ellipticity_ = ellipticity_bounds(geom_, pair_, band_, c1_, n_);
}

void GraphRun::record(double dt) {
  const TriSurface mesh = surface();
  TraceRow row = measure(mesh, geom_, pair_, state_.schedule.at(state_.t), n_);
  row.step = state_.step;
  row.time = state_.t;
  row.dt = dt;
  const double width = std::max(band_.lambda_max - band_.lambda_min, 1e-300);
  band_excursion_ = std::max({band_excursion_, (band_.lambda_min - row.lambda_min) / width,
                              (row.lambda_max - band_.lambda_max) / width});
  trace_.rows.push_back(row);
}

void GraphRun::single_step(double dt) {
  state_ = step_graph(graph_, state_, geom_, pair_, dt, c1_, n_);
}

void GraphRun::advance_to(double t) {
  while (state_.t < t - 1e-14) {
    const auto nodes = graph_nodes(graph_, state_.lambda, geom_, pair_,
                                   state_.schedule.at(state_.t), n_);
    const double dt = std::min(graph_stable_dt(graph_, nodes, control_), t - state_.t);
    single_step(dt);
  }
}

bool GraphRun::run(const RunObserver& observer) {
  trace_ = FlowTrace{};
  band_excursion_ = 0.0;
  int frame = 0;
  auto frame_out = [&] {
    if (!observer.on_frame) return;
    FlowState fs{state_.t, surface(), state_.schedule, state_.step};
    observer.on_frame(fs, frame++);
  };
  record(0.0);
  if (observer.on_row) observer.on_row(trace_.rows.back());
  frame_out();
  long last_frame_step = state_.step;
  bool converged = false;
  while (state_.t < control_.t_end && state_.step < control_.max_steps) {
    const TraceRow& row = trace_.rows.back();
    if (row.leaf_distance <= control_.leaf_tol && row.max_speed <= control_.speed_tol * row.H_max) {
      converged = true;
      break;
    }
    const auto nodes = graph_nodes(graph_, state_.lambda, geom_, pair_,
                                   state_.schedule.at(state_.t), n_);
    const double dt = std::min(graph_stable_dt(graph_, nodes, control_), control_.t_end - state_.t);
    single_step(dt);
    record(dt);
    if (observer.on_row) observer.on_row(trace_.rows.back());
    if (observer.frame_every > 0 && state_.step % observer.frame_every == 0) {
      frame_out();
      last_frame_step = state_.step;
    }
  }
  const TraceRow& last = trace_.rows.back();
  if (!converged)
    converged = last.leaf_distance <= control_.leaf_tol &&
                last.max_speed <= control_.speed_tol * last.H_max;
  if (last_frame_step != state_.step) frame_out();
  trace_.converged = converged;
  return converged;
}

}  // namespace ckflow

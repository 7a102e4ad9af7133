#include "ckflow/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "ckflow/errors.hpp"

namespace ckflow {

SurfacePoint surface_point(const AmbientGeometry& geom, const KillingPair& pair, const Vec3& x,
                           const Vec3& normal, double xi_now) {
  SurfacePoint s;
  s.x = x;
  s.normal = normal;
  const double ef = std::exp(geom.f(x));
  s.u_perp = ef * pair.perp(x).dot(normal);
  s.u_top = ef * pair.top(x).dot(normal);
  s.u = s.u_perp + xi_now * s.u_top;
  return s;
}

double perp_derivative_Lambda_phi2(const AmbientGeometry& geom, const KillingPair& pair,
                                   const Vec3& x) {
  auto q = [&](const Vec3& p) {
    const double phi = eval_phi(geom, pair, p);
    return eval_Lambda(geom, pair, p) * phi * phi;
  };
  const double h = geom.fd_step(x) / x.norm();
  return (q((1.0 + h) * x) - q((1.0 - h) * x)) / (2.0 * h);
}

double lambda_source(const AmbientGeometry& geom, const KillingPair& pair, const SurfacePoint& s,
                     double xi_now, int n) {
  const Vec3& x = s.x;
  const double phi = eval_phi(geom, pair, x);
  const double Lam = eval_Lambda(geom, pair, x);
  const double f = geom.f(x);
  const double xperp2 = std::exp(2.0 * f) * x.squaredNorm();
  const Vec3 gphi = grad_phi(geom, x);
  const double perp_phi = gphi.dot(pair.perp(x));
  const double normal_phi = std::exp(-f) * gphi.dot(s.normal);
  double b = -2.0 * Lam * n * phi * xi_now * s.u_top;
  if (geom.kind() != GeometryKind::euclidean) {
    b -= s.u * 2.0 / (phi * phi * xperp2) * perp_derivative_Lambda_phi2(geom, pair, x) *
         (xperp2 - s.u_perp * s.u_perp);
    b += 4.0 * s.u * Lam / phi * (perp_phi - s.u_perp * normal_phi);
  }
  return b;
}

namespace {

// everything the right-hand sides need at one surface point
struct PointFields {
  Vec3 x = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  double f = 0.0, phi = 0.0, lambda = 0.0;
  double u = 0.0, u_perp = 0.0, u_top = 0.0;
  double H = 0.0, kappa1 = 0.0, kappa2 = 0.0, area = 0.0;
  ScalarJet jl, ju, jh;  // flat surface gradients and Laplacians
};

struct Terms {
  double lap_l = 0.0, lap_u = 0.0, lap_h = 0.0;  // u times the g-Laplacian
  double rhs_l = 0.0, rhs_u = 0.0, rhs_h = 0.0;  // the remaining right-hand sides
};

Terms evaluate_terms(const PointFields& v, double xi_now, double xi_rate,
                     const AmbientGeometry& geom, const KillingPair& pair, int n) {
  Terms T;
  const double e2 = std::exp(-2.0 * v.f);
  T.lap_l = v.u * e2 * v.jl.laplacian;
  T.lap_u = v.u * e2 * v.ju.laplacian;
  T.lap_h = v.u * e2 * v.jh.laplacian;

  const Vec3& x = v.x;
  const Vec3& nb = v.normal;
  T.rhs_l = lambda_source(geom, pair, SurfacePoint{x, nb, v.u_perp, v.u_top, v.u}, xi_now, n);

  const Vec3 X = pair.field(x, xi_now);
  const Vec3 gphi = grad_phi(geom, x);
  const double nu_phi = std::exp(-v.f) * gphi.dot(nb);
  const double A2 = v.kappa1 * v.kappa1 + v.kappa2 * v.kappa2;
  const Mat3 ric = ricci_at(geom, x);
  const Vec3 xh = x.normalized();
  const double ric_nu = e2 * nb.dot(ric * nb);
  const double ric_perp = e2 * xh.dot(ric * xh);
  T.rhs_u = n * v.phi * v.phi - n * gphi.dot(X) - 2.0 * v.phi * v.H * v.u + A2 * v.u * v.u +
            2.0 * n * v.u * nu_phi + v.u * v.u * ric_nu + v.H * X.dot(v.ju.gradient) +
            xi_rate * v.u_top;

  double hess_term = 0.0;
  if (geom.kind() != GeometryKind::euclidean) {
    const ScalarField phi_field = [&](const Vec3& p) { return eval_phi(geom, pair, p); };
    const Mat3 hp = hessian_scalar(geom, phi_field, x);
    hess_term = e2 * (nb.dot(hp * nb) - xh.dot(hp * xh));
  }
  const double kq = v.kappa1 + v.kappa2;
  T.rhs_h = 2.0 * e2 * v.jh.gradient.dot(v.ju.gradient) + v.H * X.dot(v.jh.gradient) +
            v.phi * (kq * kq - n * A2) + n * hess_term + n * v.phi * (ric_perp - ric_nu);
  return T;
}

struct Level {
  std::vector<PointFields> p;
  std::vector<Terms> t;
};

Level mesh_level(const TriSurface& mesh, double t, const Schedule& schedule,
                 const AmbientGeometry& geom, const KillingPair& pair, int n) {
  const double xi_now = schedule.at(t);
  const auto vg = mesh_geometry(mesh, geom, pair, xi_now, true);
  const std::size_t m = vg.size();
  std::vector<Vec3> normals(m);
  std::vector<double> lam(m), u(m), H(m);
  for (std::size_t i = 0; i < m; ++i) {
    normals[i] = vg[i].normal;
    lam[i] = vg[i].lambda;
    u[i] = vg[i].u;
    H[i] = vg[i].H;
  }
  const auto fits = local_fits(mesh, normals, true);
  Level L;
  L.p.resize(m);
  L.t.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const VertexGeometry& v = vg[i];
    PointFields& q = L.p[i];
    q.x = v.position;
    q.normal = v.normal;
    q.f = v.f;
    q.phi = v.phi;
    q.lambda = v.lambda;
    q.u = v.u;
    q.u_perp = v.u_perp;
    q.u_top = v.u_top;
    q.H = v.H;
    q.kappa1 = v.kappa1;
    q.kappa2 = v.kappa2;
    q.area = v.area;
    const int vi = static_cast<int>(i);
    q.jl = scalar_jet(fits[i], vi, lam);
    q.ju = scalar_jet(fits[i], vi, u);
    q.jh = scalar_jet(fits[i], vi, H);
    L.t[i] = evaluate_terms(q, xi_now, schedule.rate(t), geom, pair, n);
  }
  return L;
}

double relative_residual(const std::vector<double>& w, const std::vector<double>& dq,
                         const std::vector<double>& lap, const std::vector<double>& rhs) {
  double r = 0.0, a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = dq[i] - lap[i] - rhs[i];
    r += w[i] * d * d;
    a += w[i] * dq[i] * dq[i];
    b += w[i] * lap[i] * lap[i];
    c += w[i] * rhs[i] * rhs[i];
  }
  const double scale = std::sqrt(std::max({a, b, c}));
  return scale > 0.0 ? std::sqrt(r) / scale : std::sqrt(r);
}

EvolutionResiduals residuals_between(const Level& a, const Level& b, double dt) {
  const std::size_t m = a.p.size();
  std::vector<double> w(m), dl(m), du(m), dh(m), ll(m), lu(m), lh(m), rl(m), ru(m), rh(m);
  for (std::size_t i = 0; i < m; ++i) {
    const PointFields& p0 = a.p[i];
    const PointFields& p1 = b.p[i];
    const Vec3 vel = (p1.x - p0.x) / dt;
    const Vec3 nb = (p0.normal + p1.normal).normalized();
    const Vec3 tan = vel - vel.dot(nb) * nb;
    auto rate = [&](double q0, double q1, const ScalarJet& j0, const ScalarJet& j1) {
      return (q1 - q0) / dt - 0.5 * (j0.gradient + j1.gradient).dot(tan);
    };
    w[i] = 0.5 * (p0.area + p1.area);
    dl[i] = rate(p0.lambda, p1.lambda, p0.jl, p1.jl);
    du[i] = rate(p0.u, p1.u, p0.ju, p1.ju);
    dh[i] = rate(p0.H, p1.H, p0.jh, p1.jh);
    const Terms& s = a.t[i];
    const Terms& e = b.t[i];
    ll[i] = 0.5 * (s.lap_l + e.lap_l);
    lu[i] = 0.5 * (s.lap_u + e.lap_u);
    lh[i] = 0.5 * (s.lap_h + e.lap_h);
    rl[i] = 0.5 * (s.rhs_l + e.rhs_l);
    ru[i] = 0.5 * (s.rhs_u + e.rhs_u);
    rh[i] = 0.5 * (s.rhs_h + e.rhs_h);
  }
  return {relative_residual(w, dl, ll, rl), relative_residual(w, du, lu, ru),
          relative_residual(w, dh, lh, rh)};
}

// Local geometry of the radial graph x = r(lambda(P)) P, P = (p + a t1 + b t2) / |...|.
class SmoothGraphPatch {
 public:
  SmoothGraphPatch(const SphericalFit& fit, const Vec3& p, const AmbientGeometry& geom,
                   const KillingPair& pair, double xi_now)
      : fit_(fit), p_(p), geom_(geom), pair_(pair), xi_(xi_now) {
    const Vec3 seed = std::abs(p.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    t1_ = (seed - seed.dot(p) * p).normalized();
    t2_ = p.cross(t1_);
  }

  Vec3 position(double a, double b) const {
    const Vec3 P = (p_ + a * t1_ + b * t2_).normalized();
    const double lam = fit_(P);
    const double r = geom_.kind() == GeometryKind::euclidean ? std::sqrt(lam)
                                                             : radius_of_lambda(geom_, pair_, lam);
    return r * P;
  }

  struct Local {
    Vec3 x, xa, xb, xaa, xab, xbb, normal;
    double f, lambda, u, u_perp, u_top, H, kappa1, kappa2;
  };

  Local local(double a, double b, double h) const {
    Local L;
    Vec3 s[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s[i][j] = position(a + (i - 1) * h, b + (j - 1) * h);
    L.x = s[1][1];
    L.xa = (s[2][1] - s[0][1]) / (2.0 * h);
    L.xb = (s[1][2] - s[1][0]) / (2.0 * h);
    L.xaa = (s[2][1] - 2.0 * s[1][1] + s[0][1]) / (h * h);
    L.xbb = (s[1][2] - 2.0 * s[1][1] + s[1][0]) / (h * h);
    L.xab = (s[2][2] - s[2][0] - s[0][2] + s[0][0]) / (4.0 * h * h);
    L.normal = L.xa.cross(L.xb).normalized();
    Eigen::Matrix2d I, II;
    I << L.xa.dot(L.xa), L.xa.dot(L.xb), L.xa.dot(L.xb), L.xb.dot(L.xb);
    II << L.xaa.dot(L.normal), L.xab.dot(L.normal), L.xab.dot(L.normal), L.xbb.dot(L.normal);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(-II, I);
    const Eigen::Vector2d kb = es.eigenvalues();
    L.f = geom_.f(L.x);
    const double shift = geom_.grad_f(L.x).dot(L.normal);
    const double ef = std::exp(L.f);
    L.kappa1 = (kb[1] + shift) / ef;
    L.kappa2 = (kb[0] + shift) / ef;
    L.H = L.kappa1 + L.kappa2;
    L.lambda = eval_lambda(geom_, pair_, L.x);
    L.u_perp = ef * pair_.perp(L.x).dot(L.normal);
    L.u_top = ef * pair_.top(L.x).dot(L.normal);
    L.u = L.u_perp + xi_ * L.u_top;
    return L;
  }

 private:
  const SphericalFit& fit_;
  Vec3 p_, t1_, t2_;
  const AmbientGeometry& geom_;
  const KillingPair& pair_;
  double xi_;
};

Level smooth_level(const LeafGraph& graph, const GraphState& state, const AmbientGeometry& geom,
                   const KillingPair& pair, int n, int degree) {
  const SphericalFit fit(graph.directions(), state.lambda, degree);
  const double xi_now = state.schedule.at(state.t);
  const double xi_rate = state.schedule.rate(state.t);
  const double h_outer = 1e-2;
  const double h_inner = 1e-3;
  const std::size_t m = graph.size();
  Level L;
  L.p.resize(m);
  L.t.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const SmoothGraphPatch patch(fit, graph.directions()[i], geom, pair, xi_now);
    SmoothGraphPatch::Local s[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s[a][b] = patch.local((a - 1) * h_outer, (b - 1) * h_outer, h_inner);
    const auto& c = s[1][1];
    Eigen::Matrix2d g;
    g << c.xa.dot(c.xa), c.xa.dot(c.xb), c.xa.dot(c.xb), c.xb.dot(c.xb);
    const Eigen::Matrix2d gi = g.inverse();
    const Vec3 xd[2] = {c.xa, c.xb};
    const Vec3 xdd[2][2] = {{c.xaa, c.xab}, {c.xab, c.xbb}};
    auto jet = [&](auto get) {
      const double q0 = get(s[1][1]);
      Eigen::Vector2d d1((get(s[2][1]) - get(s[0][1])) / (2.0 * h_outer),
                         (get(s[1][2]) - get(s[1][0])) / (2.0 * h_outer));
      Eigen::Matrix2d d2;
      d2(0, 0) = (get(s[2][1]) - 2.0 * q0 + get(s[0][1])) / (h_outer * h_outer);
      d2(1, 1) = (get(s[1][2]) - 2.0 * q0 + get(s[1][0])) / (h_outer * h_outer);
      d2(0, 1) = d2(1, 0) =
          (get(s[2][2]) - get(s[2][0]) - get(s[0][2]) + get(s[0][0])) / (4.0 * h_outer * h_outer);
      ScalarJet j;
      const Eigen::Vector2d up = gi * d1;
      j.gradient = up[0] * c.xa + up[1] * c.xb;
      double lap = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double chris = 0.0;  // Gamma^k_ab q_k
          for (int k = 0; k < 2; ++k) chris += up[k] * xdd[a][b].dot(xd[k]);
          lap += gi(a, b) * (d2(a, b) - chris);
        }
      j.laplacian = lap;
      return j;
    };
    PointFields& q = L.p[i];
    q.x = c.x;
    q.normal = c.normal;
    q.f = c.f;
    q.phi = eval_phi(geom, pair, c.x);
    q.lambda = c.lambda;
    q.u = c.u;
    q.u_perp = c.u_perp;
    q.u_top = c.u_top;
    q.H = c.H;
    q.kappa1 = c.kappa1;
    q.kappa2 = c.kappa2;
    q.area = graph.mass()[i] * std::exp(2.0 * c.f) * std::sqrt(g.determinant());
    q.jl = jet([](const SmoothGraphPatch::Local& l) { return l.lambda; });
    q.ju = jet([](const SmoothGraphPatch::Local& l) { return l.u; });
    q.jh = jet([](const SmoothGraphPatch::Local& l) { return l.H; });
    L.t[i] = evaluate_terms(q, xi_now, xi_rate, geom, pair, n);
  }
  return L;
}

}  // namespace

EvolutionResiduals graph_evolution_residuals(const LeafGraph& graph, const GraphState& before,
                                             const GraphState& after,
                                             const AmbientGeometry& geom,
                                             const KillingPair& pair, int n, int degree) {
  const double dt = after.t - before.t;
  if (!(dt > 0.0) || before.lambda.size() != graph.size() || after.lambda.size() != graph.size())
    throw InvariantViolation("residual needs two successive graph states");
  return residuals_between(smooth_level(graph, before, geom, pair, n, degree),
                           smooth_level(graph, after, geom, pair, n, degree), dt);
}

EvolutionResiduals evolution_residuals(const TriSurface& before, const TriSurface& after,
                                       double t_before, double dt, const Schedule& schedule,
                                       const AmbientGeometry& geom, const KillingPair& pair,
                                       int n) {
  if (before.num_vertices() != after.num_vertices() || !(dt > 0.0))
    throw InvariantViolation("residual needs two snapshots of one mesh");
  return residuals_between(mesh_level(before, t_before, schedule, geom, pair, n),
                           mesh_level(after, t_before + dt, schedule, geom, pair, n), dt);
}

}  // namespace ckflow

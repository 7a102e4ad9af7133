#include "ckflow/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include <boost/math/quadrature/gauss.hpp>

#include "ckflow/errors.hpp"

namespace ckflow {

using boost::math::quadrature::gauss;

TriSurface::TriSurface(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  build();
}

void TriSurface::build() {
  const long nv = static_cast<long>(vertices_.size());
  std::unordered_map<long, int> directed;
  directed.reserve(faces_.size() * 3);
  for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
    const Face& f = faces_[fi];
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      if (a < 0 || a >= nv || b < 0 || b >= nv || a == b)
        throw InvariantViolation("face " + std::to_string(fi) + " has invalid vertex indices");
      if (!directed.emplace(a * nv + b, static_cast<int>(fi)).second)
        throw InvariantViolation("edge used twice with the same orientation");
    }
  }
  neighbors_.assign(nv, {});
  vertex_faces_.assign(nv, {});
  edges_.clear();
  for (const auto& [key, fi] : directed) {
    const long a = key / nv, b = key % nv;
    if (!directed.count(b * nv + a)) throw InvariantViolation("mesh is not closed");
    if (a < b) edges_.push_back({static_cast<int>(a), static_cast<int>(b)});
  }
  std::sort(edges_.begin(), edges_.end());
  for (const auto& e : edges_) {
    neighbors_[e[0]].push_back(e[1]);
    neighbors_[e[1]].push_back(e[0]);
  }
  for (std::size_t fi = 0; fi < faces_.size(); ++fi)
    for (int v : faces_[fi]) vertex_faces_[v].push_back(static_cast<int>(fi));
  two_ring_.assign(nv, {});
  for (long v = 0; v < nv; ++v) {
    if (neighbors_[v].empty()) throw InvariantViolation("isolated vertex");
    std::vector<int> ring;
    for (int w : neighbors_[v]) {
      ring.push_back(w);
      for (int x : neighbors_[w])
        if (x != v) ring.push_back(x);
    }
    std::sort(ring.begin(), ring.end());
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    two_ring_[v] = std::move(ring);
  }
}

long TriSurface::euler_characteristic() const {
  return static_cast<long>(vertices_.size()) - static_cast<long>(edges_.size()) +
         static_cast<long>(faces_.size());
}

double TriSurface::flat_signed_volume() const {
  double v = 0.0;
  for (const Face& f : faces_)
    v += vertices_[f[0]].dot(vertices_[f[1]].cross(vertices_[f[2]]));
  return v / 6.0;
}

double TriSurface::flat_area() const {
  double a = 0.0;
  for (const Face& f : faces_)
    a += 0.5 * (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]).norm();
  return a;
}

double TriSurface::min_edge_length() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) m = std::min(m, (vertices_[e[0]] - vertices_[e[1]]).norm());
  return m;
}

double TriSurface::mean_edge_length() const {
  double s = 0.0;
  for (const auto& e : edges_) s += (vertices_[e[0]] - vertices_[e[1]]).norm();
  return s / edges_.size();
}

TriSurface TriSurface::flipped() const {
  TriSurface out = *this;
  for (Face& f : out.faces_) std::swap(f[1], f[2]);
  return out;
}

void TriSurface::validate(const AmbientGeometry* geom) const {
  if (euler_characteristic() != 2) throw InvariantViolation("surface is not a topological sphere");
  if (!(flat_signed_volume() > 0.0))
    throw InvariantViolation("surface orientation is not outward (signed volume <= 0)");
  for (const Face& f : faces_) {
    const double a =
        0.5 * (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]).norm();
    if (!(a > kAreaFloor)) throw MeshDegenerate("triangle area below floor");
  }
  if (geom)
    for (const Vec3& p : vertices_) geom->require(p);
}

namespace {

struct FlatData {
  std::vector<Vec3> lap;  // sum_j w_ij (x_i - x_j)
  std::vector<double> mixed;
  std::vector<Vec3> normal_sum;  // sum of area * unit normal
  std::vector<Vec3> max_normal;  // Max's weights, exact for vertices on a sphere
};

FlatData flat_data(const TriSurface& mesh) {
  const auto& x = mesh.vertices();
  const std::size_t nv = x.size();
  FlatData d{std::vector<Vec3>(nv, Vec3::Zero()), std::vector<double>(nv, 0.0),
             std::vector<Vec3>(nv, Vec3::Zero()), std::vector<Vec3>(nv, Vec3::Zero())};
  for (const Face& f : mesh.faces()) {
    const Vec3 cr = (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]);
    const double tarea = 0.5 * cr.norm();
    if (!(tarea > kAreaFloor)) throw MeshDegenerate("triangle area below floor");
    std::array<double, 3> cot;
    std::array<double, 3> dotc;
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = x[f[(k + 1) % 3]] - x[f[k]];
      const Vec3 e2 = x[f[(k + 2) % 3]] - x[f[k]];
      dotc[k] = e1.dot(e2);
      cot[k] = dotc[k] / (2.0 * tarea);
      d.max_normal[f[k]] += e1.cross(e2) / (e1.squaredNorm() * e2.squaredNorm());
    }
    for (int k = 0; k < 3; ++k) {
      const int b = f[(k + 1) % 3], c = f[(k + 2) % 3];
      const Vec3 e = x[b] - x[c];
      d.lap[b] += 0.5 * cot[k] * e;
      d.lap[c] -= 0.5 * cot[k] * e;
      d.normal_sum[f[k]] += 0.5 * cr;
    }
    const bool obtuse = dotc[0] < 0.0 || dotc[1] < 0.0 || dotc[2] < 0.0;
    for (int k = 0; k < 3; ++k) {
      if (!obtuse) {
        const int b = f[(k + 1) % 3], c = f[(k + 2) % 3];
        d.mixed[f[k]] += ((x[f[k]] - x[b]).squaredNorm() * cot[(k + 2) % 3] +
                          (x[f[k]] - x[c]).squaredNorm() * cot[(k + 1) % 3]) /
                         8.0;
      } else {
        d.mixed[f[k]] += dotc[k] < 0.0 ? tarea / 2.0 : tarea / 4.0;
      }
    }
  }
  return d;
}

void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  t1 = (helper - helper.dot(n) * n).normalized();
  t2 = n.cross(t1);
}

}  // namespace

std::array<double, 2> LocalFit::principal_curvatures() const {
  Eigen::Matrix2d first;
  first << 1.0 + D * D, D * E, D * E, 1.0 + E * E;
  const double s = std::sqrt(1.0 + D * D + E * E);
  Eigen::Matrix2d second;
  second << 2.0 * A, B, B, 2.0 * C;
  second /= s;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(second, first);
  const double k0 = -es.eigenvalues()[0], k1 = -es.eigenvalues()[1];
  return {std::max(k0, k1), std::min(k0, k1)};
}

Vec3 LocalFit::lift(const Vec3& origin, double a, double b) const {
  const double w = A * a * a + B * a * b + C * b * b + D * a + E * b;
  return origin + a * t1 + b * t2 + w * n;
}

std::vector<LocalFit> local_fits(const TriSurface& mesh, const std::vector<Vec3>& normals,
                                 bool with_solver) {
  const auto& x = mesh.vertices();
  std::vector<LocalFit> fits(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    LocalFit& fit = fits[i];
    fit.n = normals[i];
    tangent_frame(fit.n, fit.t1, fit.t2);
    fit.stencil = mesh.two_ring(static_cast<int>(i));
    const int m = static_cast<int>(fit.stencil.size());
    std::vector<Eigen::Vector2d> ab(m);
    double h2 = 0.0;
    for (int r = 0; r < m; ++r) {
      const Vec3 d = x[fit.stencil[r]] - x[i];
      ab[r] = {d.dot(fit.t1), d.dot(fit.t2)};
      h2 += ab[r].squaredNorm();
    }
    // columns are scaled by the stencil radius to keep the normal equations well conditioned
    const double h = std::sqrt(h2 / m);
    Eigen::Matrix<double, 5, 5> nrm = Eigen::Matrix<double, 5, 5>::Zero();
    Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
    for (int r = 0; r < m; ++r) {
      const double a = ab[r][0] / h, b = ab[r][1] / h;
      Eigen::Matrix<double, 5, 1> row;
      row << a * a, a * b, b * b, a, b;
      nrm += row * row.transpose();
      rhs += row * ((x[fit.stencil[r]] - x[i]).dot(fit.n) / h);
    }
    const Eigen::Matrix<double, 5, 1> q = nrm.ldlt().solve(rhs);
    fit.A = q[0] / h;
    fit.B = q[1] / h;
    fit.C = q[2] / h;
    fit.D = q[3];
    fit.E = q[4];
    if (with_solver) {
      Eigen::MatrixXd ds(m + 1, 6);
      ds.row(0) << 1, 0, 0, 0, 0, 0;
      for (int r = 0; r < m; ++r) {
        const double a = ab[r][0] / h, b = ab[r][1] / h;
        ds.row(r + 1) << 1, a, b, a * a, a * b, b * b;
      }
      Eigen::Matrix<double, 6, 1> scale;
      scale << 1, 1 / h, 1 / h, 1 / (h * h), 1 / (h * h), 1 / (h * h);
      const Eigen::Matrix<double, 6, 6> n6 = ds.transpose() * ds;
      fit.solver = scale.asDiagonal() * n6.ldlt().solve(ds.transpose());
    }
  }
  return fits;
}

ScalarJet scalar_jet(const LocalFit& fit, int vertex, const std::vector<double>& values) {
  Eigen::VectorXd v(fit.stencil.size() + 1);
  v[0] = values[vertex];
  for (std::size_t r = 0; r < fit.stencil.size(); ++r) v[r + 1] = values[fit.stencil[r]];
  const Eigen::Matrix<double, 6, 1> c = fit.solver * v;
  const Eigen::Vector2d dh(c[1], c[2]);
  Eigen::Matrix2d hh;
  hh << 2.0 * c[3], c[4], c[4], 2.0 * c[5];
  const Eigen::Vector2d dw(fit.D, fit.E);
  Eigen::Matrix2d ww;
  ww << 2.0 * fit.A, fit.B, fit.B, 2.0 * fit.C;
  const Eigen::Matrix2d g = Eigen::Matrix2d::Identity() + dw * dw.transpose();
  const Eigen::Matrix2d ginv = g.inverse();
  // Christoffel contraction of the graph parametrisation: Gamma^k_ij = g^kl w_l w_ij
  const Eigen::Vector2d gw = ginv * dw;
  ScalarJet jet;
  jet.laplacian = (ginv.cwiseProduct(hh)).sum() - (ginv.cwiseProduct(ww)).sum() * gw.dot(dh);
  const Eigen::Vector2d up = ginv * dh;
  jet.gradient = up[0] * (fit.t1 + fit.D * fit.n) + up[1] * (fit.t2 + fit.E * fit.n);
  return jet;
}

std::vector<VertexGeometry> mesh_geometry(const TriSurface& mesh, const AmbientGeometry& geom,
                                          const KillingPair& pair, double xi_now,
                                          bool principal_curvatures) {
  const auto& x = mesh.vertices();
  const FlatData d = flat_data(mesh);
  std::vector<VertexGeometry> out(x.size());
  std::vector<Vec3> normals(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(d.mixed[i] > kAreaFloor)) throw MeshDegenerate("mixed area below floor");
    geom.require(x[i]);
    VertexGeometry& vg = out[i];
    vg.position = x[i];
    vg.flat_area = d.mixed[i];
    vg.normal = d.max_normal[i].normalized();
    vg.volume_gradient = d.normal_sum[i] / 3.0;
    normals[i] = vg.normal;
    vg.mean_curvature_vector = d.lap[i] / d.mixed[i];
    vg.f = geom.f(x[i]);
    const double ef = std::exp(vg.f);
    const Vec3 df = geom.grad_f(x[i]);
    const double dnf = df.dot(vg.normal);
    vg.H = (vg.mean_curvature_vector.dot(vg.normal) + 2.0 * dnf) / ef;
    vg.u_perp = ef * pair.perp(x[i]).dot(vg.normal);
    vg.u_top = ef * pair.top(x[i]).dot(vg.normal);
    vg.u = vg.u_perp + xi_now * vg.u_top;
    // dilation part through K . x, which keeps sum_i A_i K_i . x_i = 2 * area exact
    const double hbar = vg.mean_curvature_vector.dot(vg.normal);
    const double xn = pair.field(x[i], xi_now).dot(vg.normal);
    vg.hu = vg.mean_curvature_vector.dot(pair.perp(x[i])) + xi_now * hbar * pair.top(x[i]).dot(vg.normal) +
            2.0 * xn * dnf;
    vg.area = ef * ef * d.mixed[i];
    const DerivedScalars s = derived_scalars(geom, pair, x[i]);
    vg.phi = s.phi;
    vg.lambda = s.lambda;
  }
  if (principal_curvatures) {
    const auto fits = local_fits(mesh, normals, false);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto kb = fits[i].principal_curvatures();
      VertexGeometry& vg = out[i];
      const double dnf = geom.grad_f(x[i]).dot(vg.normal);
      const double ef = std::exp(vg.f);
      vg.kappa1 = (kb[0] + dnf) / ef;
      vg.kappa2 = (kb[1] + dnf) / ef;
    }
  }
  return out;
}

double area(const TriSurface& mesh, const AmbientGeometry& geom) {
  const auto& x = mesh.vertices();
  static const std::array<std::array<double, 3>, 3> pts = {
      {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}}};
  double total = 0.0;
  for (const Face& f : mesh.faces()) {
    const double a = 0.5 * (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]).norm();
    if (!(a > kAreaFloor)) throw MeshDegenerate("triangle area below floor");
    double w = 0.0;
    for (const auto& b : pts) {
      const Vec3 q = b[0] * x[f[0]] + b[1] * x[f[1]] + b[2] * x[f[2]];
      if (!geom.factor_defined(q)) throw DomainExit("area quadrature node outside the domain");
      w += std::exp(2.0 * geom.f(q)) / 3.0;
    }
    total += a * w;
  }
  return total;
}

double volume(const TriSurface& mesh, const AmbientGeometry& geom) {
  const auto& x = mesh.vertices();
  if (geom.kind() == GeometryKind::euclidean) return mesh.flat_signed_volume();
  static const std::array<std::array<double, 3>, 3> pts = {
      {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}}};
  // cone over each face: x = s y, dx = 6 V s^2 ds dbeta, Gauss-Legendre along s
  double total = 0.0;
  for (const Face& f : mesh.faces()) {
    const double v6 = x[f[0]].dot(x[f[1]].cross(x[f[2]]));
    total += v6 * gauss<double, 10>::integrate(
                      [&](double s) {
                        double w = 0.0;
                        for (const auto& b : pts) {
                          const Vec3 q = s * (b[0] * x[f[0]] + b[1] * x[f[1]] + b[2] * x[f[2]]);
                          if (!geom.factor_defined(q))
                            throw DomainExit("volume quadrature node outside the domain");
                          w += std::exp(3.0 * geom.f(q)) / 6.0;
                        }
                        return s * s * w;
                      },
                      0.0, 1.0);
  }
  return total;
}

TriSurface icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& p : v) p.normalize();
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& tri : f) {
      const int ab = midpoint(tri[0], tri[1]);
      const int bc = midpoint(tri[1], tri[2]);
      const int ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  return TriSurface(std::move(v), std::move(f));
}

TriSurface ellipsoid(const Vec3& semiaxes, int level) {
  TriSurface m = icosphere(level);
  for (Vec3& p : m.positions()) p = p.cwiseProduct(semiaxes);
  return m;
}

TriSurface sphere(double radius, int level) {
  return ellipsoid(Vec3::Constant(radius), level);
}

TriSurface twist(const TriSurface& mesh, const Vec3& axis, double tau) {
  const Vec3 a = axis.normalized();
  TriSurface out = mesh;
  for (Vec3& p : out.positions()) {
    const Vec3 along = a.dot(p) * a;
    const Vec3 radial = p - along;
    const double rho = radial.norm();
    if (rho == 0.0) continue;
    const double th = tau * std::log(rho);
    p = along + std::cos(th) * radial + std::sin(th) * a.cross(radial);
  }
  return out;
}

namespace {

SeedResult measured(TriSurface mesh, const AmbientGeometry& geom, const KillingPair& pair) {
  mesh.validate(&geom);
  const auto vg = mesh_geometry(mesh, geom, pair, 1.0, false);
  SeedResult r{std::move(mesh), std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
  for (const auto& v : vg) {
    r.min_u = std::min(r.min_u, v.u);
    r.min_u_perp = std::min(r.min_u_perp, v.u_perp);
  }
  return r;
}

}  // namespace

SeedResult twisted_seed(const Vec3& semiaxes, double tau, int level, const AmbientGeometry& geom,
                        const KillingPair& pair) {
  if (!(tau >= 0.0)) throw SeedInfeasible("twist rate must be non-negative");
  SeedResult r = measured(twist(ellipsoid(semiaxes, level), pair.axis, tau), geom, pair);
  if (!(r.min_u > 0.0))
    throw SeedInfeasible("twisted seed is not starshaped with respect to X(0): min u = " +
                         std::to_string(r.min_u));
  return r;
}

SeedResult make_seed(const SeedSpec& spec, const AmbientGeometry& geom, const KillingPair& pair) {
  switch (spec.kind) {
    case SeedKind::sphere: return measured(sphere(spec.radius, spec.level), geom, pair);
    case SeedKind::ellipsoid: return measured(ellipsoid(spec.semiaxes, spec.level), geom, pair);
    case SeedKind::twisted: return twisted_seed(spec.semiaxes, spec.tau, spec.level, geom, pair);
  }
  throw SeedInfeasible("unknown seed kind");
}

MeshQuality quality(const TriSurface& mesh) {
  const auto& x = mesh.vertices();
  MeshQuality q{std::numeric_limits<double>::infinity(), 0.0,
                std::numeric_limits<double>::infinity()};
  for (const Face& f : mesh.faces()) {
    const double a = 0.5 * (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]).norm();
    double longest = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = x[f[(k + 1) % 3]] - x[f[k]];
      const Vec3 e2 = x[f[(k + 2) % 3]] - x[f[k]];
      q.min_angle = std::min(q.min_angle, std::atan2(e1.cross(e2).norm(), e1.dot(e2)));
      longest = std::max(longest, e1.norm());
    }
    q.max_aspect = std::max(q.max_aspect, longest * longest / (2.0 * a));
    q.min_area = std::min(q.min_area, a);
  }
  return q;
}

TriSurface tangential_smooth(const TriSurface& mesh, double strength) {
  const auto& x = mesh.vertices();
  const FlatData d = flat_data(mesh);
  std::vector<Vec3> normals(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) normals[i] = d.max_normal[i].normalized();
  const auto fits = local_fits(mesh, normals, false);
  // area-weighted centroid of the incident faces
  std::vector<Vec3> centroid(x.size(), Vec3::Zero());
  std::vector<double> weight(x.size(), 0.0);
  for (const Face& f : mesh.faces()) {
    const double a = 0.5 * (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]).norm();
    const Vec3 c = (x[f[0]] + x[f[1]] + x[f[2]]) / 3.0;
    for (int k = 0; k < 3; ++k) {
      centroid[f[k]] += a * c;
      weight[f[k]] += a;
    }
  }
  TriSurface out = mesh;
  auto& y = out.positions();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec3 delta = strength * (centroid[i] / weight[i] - x[i]);
    y[i] = fits[i].lift(x[i], delta.dot(fits[i].t1), delta.dot(fits[i].t2));
  }
  // restore the enclosed flat volume by a uniform offset along the volume gradient
  const double target = mesh.flat_signed_volume();
  for (int it = 0; it < 2; ++it) {
    std::vector<Vec3> grad(y.size(), Vec3::Zero());
    for (const Face& f : out.faces()) {
      const Vec3 cr = (y[f[1]] - y[f[0]]).cross(y[f[2]] - y[f[0]]) / 6.0;
      for (int k = 0; k < 3; ++k) grad[f[k]] += cr;
    }
    double rate = 0.0;
    for (const Vec3& gv : grad) rate += gv.norm();
    const double shift = (target - out.flat_signed_volume()) / rate;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += shift * grad[i].normalized();
  }
  if (!(quality(out).min_area > kAreaFloor)) throw MeshDegenerate("smoothing collapsed a triangle");
  return out;
}

void restore_volume(TriSurface& mesh, const AmbientGeometry& geom, double target, int passes) {
  auto& y = mesh.positions();
  for (int it = 0; it < passes; ++it) {
    std::vector<Vec3> grad(y.size(), Vec3::Zero());
    for (const Face& f : mesh.faces()) {
      const Vec3 cr = (y[f[1]] - y[f[0]]).cross(y[f[2]] - y[f[0]]) / 6.0;
      for (int k = 0; k < 3; ++k) grad[f[k]] += cr;
    }
    std::vector<double> w(y.size());
    double rate = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      w[i] = std::exp(geom.f(y[i]));
      rate += w[i] * w[i] * grad[i].norm();
    }
    const double shift = (target - volume(mesh, geom)) / rate;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += shift / w[i] * grad[i].normalized();
  }
}

void write_obj(std::ostream& os, const TriSurface& mesh, double time, int frame) {
  const auto old = os.precision(9);
  os << "# ckflow t=" << time << " frame=" << frame << "\n";
  for (const Vec3& p : mesh.vertices()) os << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
  for (const Face& f : mesh.faces()) os << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  os.precision(old);
}

}  // namespace ckflow

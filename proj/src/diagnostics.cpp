#include "ckflow/diagnostics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "ckflow/errors.hpp"

namespace ckflow {

const char* FlowTrace::csv_header() {
  return "step,time,xi,area,volume,lambda_min,lambda_max,u_min,uperp_min,H_min,H_max,mink1,"
         "mink2,umbilicity,leaf_distance,dt";
}

void FlowTrace::write_csv(std::ostream& os) const {
  const auto old = os.precision(9);
  os << csv_header() << "\n";
  for (const auto& r : rows) {
    os << r.step << "," << r.time << "," << r.xi << "," << r.area << "," << r.volume << ","
       << r.lambda_min << "," << r.lambda_max << "," << r.u_min << "," << r.uperp_min << ","
       << r.H_min << "," << r.H_max << "," << r.mink1 << "," << r.mink2 << "," << r.umbilicity
       << "," << r.leaf_distance << "," << r.dt << "\n";
  }
  os.precision(old);
}

double minkowski1_residual(const std::vector<VertexGeometry>& vg, int n) {
  double hu = 0.0, phi = 0.0;
  for (const auto& v : vg) {
    hu += v.H * v.u * v.area;
    phi += n * v.phi * v.area;
  }
  return std::abs(hu - phi) / phi;
}

double minkowski1_residual(const TriSurface& mesh, const AmbientGeometry& geom,
                           const KillingPair& pair, double xi_now, int n) {
  return minkowski1_residual(mesh_geometry(mesh, geom, pair, xi_now, false), n);
}

double MinkowskiSides::relative() const {
  const double den = std::max({std::abs(lhs), std::abs(rhs), scale});
  return den > 0.0 ? std::abs(lhs - rhs) / den : 0.0;
}

MinkowskiSides minkowski2_sides(const std::vector<VertexGeometry>& vg,
                                const AmbientGeometry& geom, const KillingPair& pair, int n) {
  MinkowskiSides s;
  for (const auto& v : vg) {
    const double H = v.kappa1 + v.kappa2;
    const double gap = v.kappa1 - v.kappa2;
    double ricci = 0.0;
    if (!geom.is_flat()) {
      const Mat3 ric = ricci_at(geom, v.position) * std::exp(-2.0 * v.f);
      const Vec3 nperp = pair.perp(v.position).normalized();
      ricci = nperp.dot(ric * nperp) - v.normal.dot(ric * v.normal);
    }
    s.lhs += H * (n * v.phi - H * v.u) * v.area;
    s.rhs += (double(n) / (n - 1) * v.u * ricci - gap * gap * v.u) * v.area;
    s.scale += H * H * v.u * v.area;
  }
  return s;
}

double minkowski2_residual(const TriSurface& mesh, const AmbientGeometry& geom,
                           const KillingPair& pair, double xi_now, int n) {
  return minkowski2_sides(mesh_geometry(mesh, geom, pair, xi_now, true), geom, pair, n).relative();
}

double umbilicity_deficit(const std::vector<VertexGeometry>& vg) {
  double s = 0.0;
  for (const auto& v : vg) s += (v.kappa1 - v.kappa2) * (v.kappa1 - v.kappa2) * v.area;
  return s;
}

double umbilicity_deficit(const TriSurface& mesh, const AmbientGeometry& geom,
                          const KillingPair& pair) {
  return umbilicity_deficit(mesh_geometry(mesh, geom, pair, 0.0, true));
}

double leaf_distance(const std::vector<VertexGeometry>& vg) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
  for (const auto& v : vg) {
    lo = std::min(lo, v.lambda);
    hi = std::max(hi, v.lambda);
    mean += v.lambda;
  }
  return (hi - lo) / (mean / vg.size());
}

double leaf_distance(const TriSurface& mesh, const KillingPair& pair, const AmbientGeometry& geom) {
  return leaf_distance(mesh_geometry(mesh, geom, pair, 0.0, false));
}

double uperp_criterion(const std::vector<VertexGeometry>& vg, const AmbientGeometry& geom,
                       const KillingPair& pair) {
  double worst = 0.0;
  for (const auto& v : vg) {
    const double len = std::exp(v.f) * pair.perp(v.position).norm();
    worst = std::max(worst, std::abs(v.u_perp - len) / len);
  }
  (void)geom;
  return worst;
}

TraceRow measure(const TriSurface& mesh, const std::vector<VertexGeometry>& vg,
                 const AmbientGeometry& geom, const KillingPair& pair, double xi_now, int n) {
  TraceRow r;
  r.xi = xi_now;
  r.area = area(mesh, geom);
  r.volume = volume(mesh, geom);
  const double inf = std::numeric_limits<double>::infinity();
  r.lambda_min = r.u_min = r.uperp_min = r.H_min = inf;
  r.lambda_max = r.H_max = -inf;
  for (const auto& v : vg) {
    r.lambda_min = std::min(r.lambda_min, v.lambda);
    r.lambda_max = std::max(r.lambda_max, v.lambda);
    r.u_min = std::min(r.u_min, v.u);
    r.uperp_min = std::min(r.uperp_min, v.u_perp);
    r.H_min = std::min(r.H_min, v.H);
    r.H_max = std::max(r.H_max, v.H);
    r.max_speed = std::max(r.max_speed, std::abs(n * v.phi - v.hu));
  }
  r.mink1 = minkowski1_residual(vg, n);
  r.mink2 = minkowski2_sides(vg, geom, pair, n).relative();
  r.umbilicity = umbilicity_deficit(vg);
  r.leaf_distance = leaf_distance(vg);
  r.uperp_criterion = uperp_criterion(vg, geom, pair);
  return r;
}

TraceRow measure(const TriSurface& mesh, const AmbientGeometry& geom, const KillingPair& pair,
                 double xi_now, int n) {
  return measure(mesh, mesh_geometry(mesh, geom, pair, xi_now, true), geom, pair, xi_now, n);
}

namespace {

using boost::math::quadrature::gauss;
constexpr int kPanels = 8;

// integral over the unit sphere of g(q); polar axis e1, where the built-in factors are
// axially symmetric
template <class G>
double sphere_integral(G&& g) {
  double total = 0.0;
  const int nphi = 16;
  for (int p = 0; p < kPanels; ++p) {
    const double c0 = -1.0 + 2.0 * p / kPanels, c1 = -1.0 + 2.0 * (p + 1) / kPanels;
    total += gauss<double, 20>::integrate(
        [&](double c) {
          const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
          double acc = 0.0;
          for (int k = 0; k < nphi; ++k) {
            const double az = 2.0 * std::numbers::pi * (k + 0.5) / nphi;
            acc += g(Vec3(c, s * std::cos(az), s * std::sin(az)));
          }
          return acc * 2.0 * std::numbers::pi / nphi;
        },
        c0, c1);
  }
  return total;
}

}  // namespace

double leaf_area(const AmbientGeometry& geom, double r) {
  return r * r * sphere_integral([&](const Vec3& q) {
    const Vec3 p = r * q;
    if (!geom.factor_defined(p)) throw DomainExit("leaf outside the domain");
    return std::exp(2.0 * geom.f(p));
  });
}

double leaf_volume(const AmbientGeometry& geom, double r) {
  return sphere_integral([&](const Vec3& q) {
    double acc = 0.0;
    for (int p = 0; p < kPanels; ++p) {
      const double s0 = r * p / kPanels, s1 = r * (p + 1) / kPanels;
      acc += gauss<double, 20>::integrate(
          [&](double s) {
            const Vec3 x = s * q;
            if (!geom.factor_defined(x)) throw DomainExit("ball outside the domain");
            return s * s * std::exp(3.0 * geom.f(x));
          },
          s0, s1);
    }
    return acc;
  });
}

LeafProfile leaf_profile(const AmbientGeometry& geom, const KillingPair& pair,
                         const std::vector<double>& r_grid) {
  (void)pair;
  LeafProfile prof;
  for (double r : r_grid) {
    if (!(r > 0.0) || !(r < geom.outer_radius())) throw DomainExit("profile radius outside the domain");
    prof.r.push_back(r);
    prof.area.push_back(leaf_area(geom, r));
    prof.volume.push_back(leaf_volume(geom, r));
    const std::size_t k = prof.r.size();
    if (k > 1 && !(prof.volume[k - 1] > prof.volume[k - 2] && prof.r[k - 1] > prof.r[k - 2]))
      throw ProfileNotMonotone("ball volume is not strictly increasing on the radius grid");
  }
  return prof;
}

IsoperimetricVerdict isoperimetric_check(const FlowTrace& trace, const LeafProfile& profile,
                                         const AmbientGeometry& geom, double tol) {
  if (trace.rows.empty()) throw ProfileNotMonotone("empty trace");
  if (profile.r.size() < 2) throw ProfileNotMonotone("profile needs at least two radii");
  IsoperimetricVerdict v;
  v.area_initial = trace.rows.front().area;
  v.area_final = trace.rows.back().area;
  v.volume_initial = trace.rows.front().volume;
  const double target = v.volume_initial;
  auto it = std::lower_bound(profile.volume.begin(), profile.volume.end(), target);
  if (it == profile.volume.end() || (it == profile.volume.begin() && *it > target))
    throw ProfileNotMonotone("initial volume outside the tabulated profile");
  const std::size_t k = static_cast<std::size_t>(it - profile.volume.begin());
  double lo = k == 0 ? profile.r[0] : profile.r[k - 1];
  double hi = profile.r[k];
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (leaf_volume(geom, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  v.r1 = 0.5 * (lo + hi);
  v.area_leaf = leaf_area(geom, v.r1);
  v.pass = v.area_leaf <= v.area_initial * (1.0 + tol);
  v.equality = std::abs(v.area_leaf - v.area_initial) <= tol * v.area_initial;
  return v;
}

GrowthFit h_growth_fit(const FlowTrace& trace) {
  GrowthFit fit;
  const auto& rows = trace.rows;
  if (rows.size() < 10) return fit;
  const std::size_t half = rows.size() / 2;
  double st = 0, sh = 0, stt = 0, sth = 0;
  for (std::size_t i = 0; i < half; ++i) {
    st += rows[i].time;
    sh += rows[i].H_max;
    stt += rows[i].time * rows[i].time;
    sth += rows[i].time * rows[i].H_max;
  }
  const double m = static_cast<double>(half);
  const double den = m * stt - st * st;
  double b = den > 0.0 ? (m * sth - st * sh) / den : 0.0;
  b = std::max(b, 0.0);
  double a = (sh - b * st) / m;
  double lift = 0.0;
  for (std::size_t i = 0; i < half; ++i)
    lift = std::max(lift, rows[i].H_max - (a + b * rows[i].time));
  a += lift;
  fit.a = a;
  fit.b = b;
  fit.pass = std::all_of(rows.begin(), rows.end(), [&](const TraceRow& r) {
    return r.H_max <= a + b * r.time + 1e-6;
  });
  return fit;
}

}  // namespace ckflow

// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ckflow/app.hpp"
#include "ckflow/errors.hpp"
#include "ckflow/evolution.hpp"
#include "ckflow/flow.hpp"
#include "ckflow/graph.hpp"

using namespace ckflow;

namespace {

constexpr double kPi = std::numbers::pi;
const KillingPair kE1(Vec3(1, 0, 0), 1.0);
const KillingPair kE3(Vec3(0, 0, 1), 1.0);
constexpr double kTwistRate = 1.2;  // regression constant from the twist sweep
const Vec3 kTwistAxes(1.6, 0.7, 0.7);

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
double worst_band_excursion = 0.0;
int accepted_runs = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Schedule schedule_for(const TriSurface& seed, const AmbientGeometry& g, const KillingPair& pair,
                      bool enabled = true) {
  RunConfig rc;
  rc.schedule_mode = enabled ? ScheduleMode::automatic : ScheduleMode::off;
  return make_schedule(rc, g, pair, seed_shell(seed, g, pair));
}

struct RunSummary {
  bool converged = false;
  double volume_drift = 0.0;
  double max_area_increase = 0.0;
  double min_u = 0.0;
  double band_excursion = 0.0;
  TraceRow first, last;
  long steps = 0;
};

RunSummary summarize(const FlowTrace& trace, double band_excursion) {
  RunSummary s;
  const auto& rows = trace.rows;
  s.converged = trace.converged;
  s.first = rows.front();
  s.last = rows.back();
  s.steps = rows.back().step;
  s.min_u = rows.front().u_min;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.volume_drift = std::max(s.volume_drift, std::abs(rows[i].volume / rows[0].volume - 1));
    s.min_u = std::min(s.min_u, rows[i].u_min);
    if (i > 0)
      s.max_area_increase =
          std::max(s.max_area_increase, (rows[i].area - rows[i - 1].area) / rows[i - 1].area);
  }
  s.band_excursion = band_excursion;
  worst_band_excursion = std::max(worst_band_excursion, band_excursion);
  ++accepted_runs;
  return s;
}

RunSummary lagrangian_run(const AmbientGeometry& g, const KillingPair& pair, const TriSurface& seed,
                          int smooth_every, double t_end = 10.0) {
  StepControl c;
  c.smooth_every = smooth_every;
  c.t_end = t_end;
  FlowRun run(g, pair, FlowState{0.0, seed, schedule_for(seed, g, pair), 0}, c);
  run.run();
  return summarize(run.trace(), run.band_excursion());
}

std::vector<double> graph_seed(const LeafGraph& graph, const AmbientGeometry& g,
                               const KillingPair& pair, const Vec3& axes) {
  std::vector<double> lam;
  for (const Vec3& d : graph.directions())
    lam.push_back(eval_lambda(g, pair, d / d.cwiseQuotient(axes).norm()));
  return lam;
}

// cached (2,1,1) ellipsoid run shared by two criteria
const RunSummary& ellipsoid_run() {
  static const RunSummary s =
      lagrangian_run(AmbientGeometry::euclidean(), kE1, ellipsoid(Vec3(2, 1, 1), 4), 0);
  return s;
}

}  // namespace

int main() {
  report("leaf-stationarity", [] {
    const auto g = AmbientGeometry::euclidean();
    double worst = 0.0;
    for (double r : {0.5, 1.0, 2.0}) {
      double smax = 0.0, hmax = 0.0;
      for (const auto& v : mesh_geometry(sphere(r, 4), g, kE1, 1.0)) {
        smax = std::max(smax, std::abs(speed(v, v.phi)));
        hmax = std::max(hmax, v.H);
      }
      worst = std::max(worst, smax / hmax);
    }
    return Outcome{worst <= 1e-2, "max |speed| / max H = " + fmt("%.2e", worst) + " (<= 1e-2)"};
  });

  report("conservation-monotonicity", [] {
    const RunSummary& s = ellipsoid_run();
    const bool ok = s.converged && s.volume_drift <= 5e-3 && s.max_area_increase <= 1e-8;
    return Outcome{ok, "(2,1,1) L4, " + std::to_string(s.steps) + " steps: volume drift " +
                           fmt("%.2e", s.volume_drift) + " (<= 5e-3), max step area increase " +
                           fmt("%.2e", s.max_area_increase) + " (<= 1e-8)"};
  });

  report("convergence-target", [] {
    const RunSummary& s = ellipsoid_run();
    const double target = 4 * kPi * std::pow(2.0, 2.0 / 3.0);
    const double err = std::abs(s.last.area / target - 1);
    const bool ok = s.converged && s.last.leaf_distance <= 1e-2 && err <= 1e-2;
    return Outcome{ok, "leaf distance " + fmt("%.2e", s.last.leaf_distance) +
                           " (<= 1e-2), final area vs 4 pi 2^(2/3): " + fmt("%.2e", err) +
                           " (<= 1e-2)"};
  });

  RunSummary twisted;
  std::string unscheduled;
  bool unscheduled_ok = false;
  report("schedule-necessity", [&] {
    const auto g = AmbientGeometry::euclidean();
    const SeedResult seed = twisted_seed(kTwistAxes, kTwistRate, 4, g, kE3);
    twisted = lagrangian_run(g, kE3, seed.mesh, 10);
    const bool scheduled_ok = seed.min_u_perp < 0.0 && seed.min_u > 0.0 && twisted.converged &&
                              twisted.min_u > 0.0;
    StepControl c;
    FlowRun bare(g, kE3, FlowState{0.0, seed.mesh, schedule_for(seed.mesh, g, kE3, false), 0}, c);
    try {
      bare.run();
      unscheduled = "unscheduled run did not fail";
    } catch (const StarshapeLost& e) {
      unscheduled_ok = bare.trace().rows.empty();
      unscheduled = "unscheduled run rejected at t=0";
    }
    return Outcome{scheduled_ok && unscheduled_ok,
                   "twist " + fmt("%.2f", kTwistRate) + ": min u_perp(0) = " +
                       fmt("%.3f", seed.min_u_perp) + ", min u(0) = " + fmt("%.3f", seed.min_u) +
                       "; scheduled run " + (twisted.converged ? "converged" : "did not converge") +
                       " in " + std::to_string(twisted.steps) + " steps with min_t min u = " +
                       fmt("%.3f", twisted.min_u) + "; " + unscheduled};
  });

  RunSummary conformal;
  report("conformal-example", [&] {
    const auto g = AmbientGeometry::paper_example();
    std::ostringstream d;
    bool ok = true;
    const auto rep = verify_assumptions(g, kE1, shell_from_radii(g, kE1, 0.3, 1.8), 500, 1e-5, 1);
    int passed = 0;
    for (const auto& c : rep.conditions) passed += c.pass ? 1 : 0;
    ok &= passed == 10;
    d << passed << "/10 conditions; ";

    const double phi = eval_phi(g, kE1, Vec3(1, 0, 0));
    const double lam = eval_lambda(g, kE1, Vec3(1, 0, 0));
    const double xl = perp_derivative_lambda(g, kE1, Vec3(1, 0, 0));
    const double h = 1e-5;
    const double xl_fd =
        (eval_lambda(g, kE1, Vec3(1 + h, 0, 0)) - eval_lambda(g, kE1, Vec3(1 - h, 0, 0))) / (2 * h);
    const double spot = std::max({std::abs(phi - 3), std::abs(lam - 1.0 / 9), std::abs(xl - 10.0 / 27)});
    ok &= spot <= 1e-10 && std::abs(xl_fd - 10.0 / 27) <= 1e-5;
    d << "spot error " << fmt("%.1e", spot) << ", difference error " << fmt("%.1e", std::abs(xl_fd - 10.0 / 27)) << "; ";

    const TriSurface seed = ellipsoid(Vec3(1.1, 1.0, 0.95), 4);
    conformal = lagrangian_run(g, kE1, seed, 0);
    FlowTrace t;
    t.rows = {conformal.first};
    const double r_lo = 0.5, r_hi = 1.5;
    const auto prof = leaf_profile(g, kE1, {r_lo, 1.0, r_hi});
    const auto iso = isoperimetric_check(t, prof, g);
    const double area_err = std::abs(conformal.last.area / iso.area_leaf - 1);
    ok &= conformal.converged && conformal.last.leaf_distance <= 1e-2 &&
          conformal.volume_drift <= 5e-3 && conformal.max_area_increase <= 1e-8 && area_err <= 1e-2;
    d << "near-sphere run " << (conformal.converged ? "converged" : "did not converge") << " in "
      << conformal.steps << " steps, leaf distance " << fmt("%.1e", conformal.last.leaf_distance)
      << ", volume drift " << fmt("%.1e", conformal.volume_drift) << ", max area increase "
      << fmt("%.1e", conformal.max_area_increase) << ", final area vs equal-volume leaf "
      << fmt("%.1e", area_err);
    return Outcome{ok, d.str()};
  });

  report("minkowski-identities", [] {
    const auto e = AmbientGeometry::euclidean();
    const auto pe = AmbientGeometry::paper_example();
    struct Shape {
      const char* name;
      AmbientGeometry g;
      KillingPair pair;
      std::function<TriSurface(int)> make;
    };
    const std::vector<Shape> shapes = {
        {"sphere", e, kE1, [](int l) { return icosphere(l); }},
        {"ellipsoid(2,1,1)", e, kE1, [](int l) { return ellipsoid(Vec3(2, 1, 1), l); }},
        {"ellipsoid(1.5,1,1)", e, kE1, [](int l) { return ellipsoid(Vec3(1.5, 1, 1), l); }},
        {"twisted", e, kE3,
         [](int l) { return twisted_seed(kTwistAxes, kTwistRate, l, AmbientGeometry::euclidean(), kE3).mesh; }},
        {"conformal ellipsoid", pe, kE1, [](int l) { return ellipsoid(Vec3(1.1, 1.0, 0.95), l); }},
    };
    bool ok = true;
    double m1 = 0.0, m2 = 0.0;
    std::ostringstream d;
    for (const Shape& s : shapes) {
      const double a4 = minkowski1_residual(s.make(4), s.g, s.pair, 1.0);
      const double b4 = minkowski2_residual(s.make(4), s.g, s.pair, 1.0);
      m1 = std::max(m1, a4);
      m2 = std::max(m2, b4);
      ok &= a4 <= 1e-2 && b4 <= 5e-2;
    }
    const double l4 = minkowski1_residual(ellipsoid(Vec3(2, 1, 1), 4), e, kE1, 1.0);
    const double l5 = minkowski1_residual(ellipsoid(Vec3(2, 1, 1), 5), e, kE1, 1.0);
    ok &= l5 <= 0.7 * l4;
    d << "max mink1 " << fmt("%.1e", m1) << " (<= 1e-2), max mink2 " << fmt("%.1e", m2)
      << " (<= 5e-2), refinement ratio L5/L4 on (2,1,1) " << fmt("%.2f", l5 / l4) << " (<= 0.7)";
    return Outcome{ok, d.str()};
  });

  report("evolution-residuals", [] {
    std::ostringstream d;
    bool ok = true;
    double lam_worst = 0.0, u_worst = 0.0, h_worst = 0.0;
    struct Case {
      AmbientGeometry g;
      KillingPair pair;
      Vec3 axes;
    };
    for (const Case& c : {Case{AmbientGeometry::euclidean(), kE3, Vec3(1.3, 1.0, 1.0)},
                          Case{AmbientGeometry::paper_example(), kE1, Vec3(1.15, 1.0, 0.92)}}) {
      // lambda along the Lagrangian trajectory
      StepControl ctl;
      ctl.smooth_every = 0;
      const TriSurface seed = ellipsoid(c.axes, 4);
      Schedule sch;
      sch.t0 = 1.0;
      FlowState s{0.0, seed, sch, 0};
      for (double T : {0.0, 0.1}) {
        while (s.t < T - 1e-14) s = step_lagrangian(s, c.g, c.pair, std::min(stable_dt(s, c.g, c.pair, ctl), T - s.t), ctl);
        const double dt = stable_dt(s, c.g, c.pair, ctl);
        const FlowState n = step_lagrangian(s, c.g, c.pair, dt, ctl);
        lam_worst = std::max(lam_worst, evolution_residuals(s.mesh, n.mesh, s.t, dt, sch, c.g, c.pair).lambda);
      }
      // u and H on the graph backend
      const LeafGraph graph(4);
      GraphRun run(c.g, c.pair, 4, GraphState{0.0, graph_seed(graph, c.g, c.pair, c.axes), sch, 0}, ctl);
      for (double T : {0.0, 0.1}) {
        run.advance_to(T);
        const GraphState a = run.state();
        const auto nodes = graph_nodes(run.graph(), a.lambda, c.g, c.pair, sch.at(a.t));
        const double dt = graph_stable_dt(run.graph(), nodes, ctl);
        const GraphState b = step_graph(run.graph(), a, c.g, c.pair, dt, run.gradient_bound());
        const auto r = graph_evolution_residuals(run.graph(), a, b, c.g, c.pair);
        u_worst = std::max(u_worst, r.u);
        h_worst = std::max(h_worst, r.H);
      }
    }
    ok = lam_worst <= 5e-2 && u_worst <= 0.1 && h_worst <= 0.1;
    d << "lambda (Lagrangian, L4) " << fmt("%.3f", lam_worst) << " (<= 0.05); u (graph, L4) "
      << fmt("%.3f", u_worst) << ", H (graph, L4) " << fmt("%.3f", h_worst) << " (<= 0.10)";
    return Outcome{ok, d.str()};
  });

  report("graph-ellipticity", [] {
    const auto b = ellipticity_bounds(LeafCoefficients{1.0, 1.0}, 1.0);
    const double e2 = std::abs(b.c2 - std::pow(2.0, -1.5)), e3 = std::abs(b.c3 - 1.0);
    const auto g = AmbientGeometry::paper_example();
    const Shell shell = shell_from_radii(g, kE1, 0.3, 1.8);
    const double c1 = graph_gradient_bound(g, kE1, shell, 0.5 * std::sqrt(shell.lambda_min));
    const auto pb = ellipticity_bounds(g, kE1, shell, c1);
    return Outcome{e2 <= 1e-6 && e3 <= 1e-6 && pb.c2 > 0.0,
                   "unit case (c2, c3) = (" + fmt("%.9f", b.c2) + ", " + fmt("%.9f", b.c3) +
                       "); conformal shell c1 = " + fmt("%.3f", c1) + ", c2 = " + fmt("%.3e", pb.c2)};
  });

  RunSummary graph_summary;
  report("cross-backend", [&] {
    const auto g = AmbientGeometry::euclidean();
    const Vec3 axes(1.3, 1.0, 1.0);
    const int level = 3;
    const LeafGraph graph(level);
    Schedule sch;
    sch.t0 = 1.0;
    StepControl ctl;
    const auto lam0 = graph_seed(graph, g, kE3, axes);
    GraphRun run(g, kE3, level, GraphState{0.0, lam0, sch, 0}, ctl);
    FlowState s{0.0, graph.surface(lam0, g, kE3), sch, 0};
    double worst = 0.0;
    for (double T : {0.05, 0.1, 0.2, 0.4}) {
      run.advance_to(T);
      while (s.t < T - 1e-14) s = step_lagrangian(s, g, kE3, std::min(stable_dt(s, g, kE3, ctl), T - s.t), ctl);
      double err = 0.0, scale = 0.0;
      for (const Vec3& x : s.mesh.vertices()) {
        const double lg = graph.interpolate(run.state().lambda, x.normalized());
        err = std::max(err, std::abs(eval_lambda(g, kE3, x) - lg));
        scale = std::max(scale, std::abs(lg));
      }
      worst = std::max(worst, err / scale);
    }
    // full graph run for the maximum-principle record
    GraphRun full(g, kE3, level, GraphState{0.0, lam0, sch, 0}, ctl);
    full.run();
    graph_summary = summarize(full.trace(), full.band_excursion());
    return Outcome{worst <= 2e-2, "max relative lambda difference over t in {0.05, 0.1, 0.2, 0.4}: " +
                                      fmt("%.2e", worst) + " (<= 2e-2)"};
  });

  report("maximum-principle", [&] {
    return Outcome{accepted_runs >= 4 && worst_band_excursion <= 1e-3,
                   std::to_string(accepted_runs) + " runs, worst lambda excursion outside the initial band " +
                       fmt("%.2e", worst_band_excursion) + " of its width (<= 1e-3)"};
  });

  report("isoperimetric-equality", [] {
    bool ok = true;
    std::ostringstream d;
    for (const auto& g : {AmbientGeometry::euclidean(), AmbientGeometry::paper_example()}) {
      const double r = 1.2;
      FlowTrace t;
      t.rows.push_back(measure(sphere(r, 5), g, kE1, 0.0));
      const auto v = isoperimetric_check(t, leaf_profile(g, kE1, {0.5, 1.0, 1.5}), g);
      ok &= std::abs(v.r1 - r) <= 1e-3 && v.equality && v.pass;
      d << g.name() << ": |r1 - r| = " << fmt("%.1e", std::abs(v.r1 - r)) << ", area gap "
        << fmt("%.1e", std::abs(v.area_leaf / v.area_initial - 1)) << "; ";
    }
    d << "tolerances 1e-3 and 5e-3";
    return Outcome{ok, d.str()};
  });

  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}

#include "ckflow/app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>

#include "ckflow/errors.hpp"
#include "ckflow/flow.hpp"
#include "ckflow/graph.hpp"

namespace ckflow {

namespace fs = std::filesystem;

const char* status_name(ExitCode code) {
  switch (code) {
    case ExitCode::ok: return "ok";
    case ExitCode::assumptions: return "assumptions";
    case ExitCode::flow: return "flow";
    case ExitCode::nonconv: return "nonconv";
    case ExitCode::config: return "config";
  }
  return "flow";
}

namespace {

struct Context {
  RunConfig config;
  AmbientGeometry geom = AmbientGeometry::euclidean();
  KillingPair pair;
  fs::path out_dir;
};

Context load(const AppOptions& opt) {
  Context c;
  c.config = load_config(opt.config_path);
  c.geom = c.config.make_geometry();
  c.pair = c.config.make_pair();
  c.out_dir = opt.out_dir ? fs::path(*opt.out_dir) : fs::path(c.config.output_dir);
  return c;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("output directory " + dir.string() + " is not writable");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

// largest coordinate radius kept inside the domain for shells and profiles
double safe_radius(const AmbientGeometry& geom) {
  const double R = geom.outer_radius();
  return std::isfinite(R) ? 0.98 * R : std::numeric_limits<double>::infinity();
}

std::pair<double, double> radius_range(const TriSurface& mesh) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Vec3& p : mesh.vertices()) {
    lo = std::min(lo, p.norm());
    hi = std::max(hi, p.norm());
  }
  return {lo, hi};
}

std::vector<double> radius_grid(double r_min, double r_max, int points) {
  std::vector<double> r(points);
  for (int i = 0; i < points; ++i) r[i] = r_min + (r_max - r_min) * i / (points - 1);
  return r;
}

std::vector<double> default_profile_grid(const RunConfig& config, const AmbientGeometry& geom,
                                         const TriSurface& seed) {
  if (config.profile_r_min)
    return radius_grid(*config.profile_r_min, *config.profile_r_max, config.profile_points);
  const auto [lo, hi] = radius_range(seed);
  return radius_grid(0.5 * lo, std::min(1.5 * hi, safe_radius(geom)), config.profile_points);
}

ExitCode guarded(std::ostream& err, const std::function<ExitCode()>& body) {
  ExitCode code;
  try {
    code = body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    code = ExitCode::config;
  } catch (const ScheduleInfeasible& e) {
    err << "schedule infeasible: " << e.what() << "\n";
    code = ExitCode::assumptions;
  } catch (const SeedInfeasible& e) {
    err << "seed infeasible: " << e.what() << "\n";
    code = ExitCode::assumptions;
  } catch (const ProfileNotMonotone& e) {
    err << "profile error: " << e.what() << "\n";
    code = ExitCode::assumptions;
  } catch (const StarshapeLost& e) {
    err << "starshapedness lost: " << e.what() << "\n";
    code = ExitCode::flow;
  } catch (const FlowError& e) {
    err << "flow error: " << e.what() << "\n";
    code = ExitCode::flow;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = ExitCode::flow;
  }
  err << "STATUS=" << status_name(code) << "\n";
  err.flush();
  return code;
}

}  // namespace

Shell seed_shell(const TriSurface& seed, const AmbientGeometry& geom, const KillingPair& pair) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Vec3& p : seed.vertices()) {
    const double l = eval_lambda(geom, pair, p);
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  Shell s{0.9 * lo, 1.1 * hi};
  const double r_cap = safe_radius(geom);
  if (std::isfinite(r_cap)) s.lambda_max = std::min(s.lambda_max, lambda_of_radius(geom, pair, r_cap));
  return s;
}

Schedule make_schedule(const RunConfig& config, const AmbientGeometry& geom,
                       const KillingPair& pair, const Shell& shell) {
  Schedule s;
  s.margin = config.margin;
  switch (config.schedule_mode) {
    case ScheduleMode::off: s.enabled = false; break;
    case ScheduleMode::fixed: s.t0 = config.t0; break;
    case ScheduleMode::automatic:
      s.t0 = estimate_T0(geom, pair, shell, 2, config.margin, {32, 1000, config.rng_seed});
      break;
  }
  return s;
}

Shell verify_shell(const RunConfig& config, const AmbientGeometry& geom, const KillingPair& pair,
                   const TriSurface& seed) {
  if (config.verify_r_min)
    return shell_from_radii(geom, pair, *config.verify_r_min, *config.verify_r_max);
  return seed_shell(seed, geom, pair);
}

void write_verdict(std::ostream& os, const Verdict& v) {
  const auto old = os.precision(12);
  os << "area_initial=" << v.iso.area_initial << "\n"
     << "area_final=" << v.iso.area_final << "\n"
     << "volume_initial=" << v.iso.volume_initial << "\n"
     << "volume_final=" << v.volume_final << "\n"
     << "area_leaf_equal_volume=" << v.iso.area_leaf << "\n"
     << "isoperimetric_pass=" << (v.iso.pass ? "true" : "false") << "\n"
     << "converged=" << (v.converged ? "true" : "false") << "\n";
  os.precision(old);
}

ExitCode cmd_run(const AppOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Context c = load(opt);
    prepare_dir(c.out_dir);
    const SeedResult seed = make_seed(c.config.seed, c.geom, c.pair);

    const Shell vshell = verify_shell(c.config, c.geom, c.pair, seed.mesh);
    const AssumptionReport report = verify_assumptions(
        c.geom, c.pair, vshell, c.config.verify_samples, c.config.verify_tol, c.config.rng_seed);
    if (!opt.quiet) out << report.table();
    if (!report.all_pass()) {
      err << "assumption check failed" << (opt.force ? " (continuing: --force)" : "") << "\n";
      if (!opt.force) return ExitCode::assumptions;
    }

    const Shell band = seed_shell(seed.mesh, c.geom, c.pair);
    const Schedule schedule = make_schedule(c.config, c.geom, c.pair, band);
    if (!opt.quiet) {
      if (schedule.enabled) out << "T0=" << schedule.t0 << "\n";
      else out << "schedule off\n";
    }

    RunObserver observer;
    observer.frame_every = c.config.frame_every;
    observer.on_frame = [&](const FlowState& s, int k) {
      std::ofstream os = open_out(c.out_dir / ("frame_" + std::to_string(k) + ".obj"));
      write_obj(os, s.mesh, s.t, k);
    };

    FlowTrace trace;
    bool converged = false;
    std::optional<FlowError> failure;
    std::string failure_kind;
    auto run_guarded = [&](auto& runner) {
      try {
        converged = runner.run(observer);
      } catch (const StarshapeLost& e) {
        failure.emplace(e.what());
        failure_kind = "starshapedness lost";
      } catch (const FlowError& e) {
        failure.emplace(e.what());
        failure_kind = "flow error";
      }
      trace = runner.trace();
    };

    if (c.config.backend == Backend::lagrangian) {
      FlowRun runner(c.geom, c.pair, FlowState{0.0, seed.mesh, schedule, 0}, c.config.control);
      run_guarded(runner);
    } else {
      const LeafGraph leaf(c.config.seed.level);
      GraphState initial{0.0, leaf.sample(seed.mesh, c.geom, c.pair), schedule, 0};
      GraphRun runner(c.geom, c.pair, c.config.seed.level, std::move(initial), c.config.control);
      run_guarded(runner);
    }

    {
      std::ofstream os = open_out(c.out_dir / "trace.csv");
      trace.write_csv(os);
    }
    if (failure) {
      err << failure_kind << ": " << failure->what() << "\n";
      return ExitCode::flow;
    }

    const LeafProfile profile =
        leaf_profile(c.geom, c.pair, default_profile_grid(c.config, c.geom, seed.mesh));
    Verdict v;
    v.iso = isoperimetric_check(trace, profile, c.geom);
    v.volume_final = trace.rows.back().volume;
    v.converged = converged;
    {
      std::ofstream os = open_out(c.out_dir / "verdict.txt");
      write_verdict(os, v);
    }
    if (!opt.quiet) {
      out << "steps=" << trace.rows.back().step << " t=" << trace.rows.back().time
          << " converged=" << (converged ? "true" : "false") << "\n";
      write_verdict(out, v);
    }
    return converged ? ExitCode::ok : ExitCode::nonconv;
  });
}

ExitCode cmd_verify(const AppOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Context c = load(opt);
    Shell shell;
    if (c.config.verify_r_min) {
      shell = shell_from_radii(c.geom, c.pair, *c.config.verify_r_min, *c.config.verify_r_max);
    } else {
      shell = seed_shell(make_seed(c.config.seed, c.geom, c.pair).mesh, c.geom, c.pair);
    }
    const AssumptionReport report = verify_assumptions(
        c.geom, c.pair, shell, c.config.verify_samples, c.config.verify_tol, c.config.rng_seed);
    out << report.table();
    return report.all_pass() ? ExitCode::ok : ExitCode::assumptions;
  });
}

ExitCode cmd_profile(const AppOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Context c = load(opt);
    prepare_dir(c.out_dir);
    std::vector<double> grid;
    if (c.config.profile_r_min) {
      grid = radius_grid(*c.config.profile_r_min, *c.config.profile_r_max, c.config.profile_points);
    } else {
      grid = default_profile_grid(c.config, c.geom, make_seed(c.config.seed, c.geom, c.pair).mesh);
    }
    const LeafProfile prof = leaf_profile(c.geom, c.pair, grid);
    const fs::path path = c.out_dir / "profile.csv";
    std::ofstream os = open_out(path);
    os.precision(12);
    os << "r,area,volume\n";
    for (std::size_t i = 0; i < prof.r.size(); ++i)
      os << prof.r[i] << "," << prof.area[i] << "," << prof.volume[i] << "\n";
    if (!opt.quiet) out << "wrote " << path.string() << " (" << prof.r.size() << " rows)\n";
    return ExitCode::ok;
  });
}

ExitCode cmd_seed(const AppOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Context c = load(opt);
    prepare_dir(c.out_dir);
    const SeedResult seed = make_seed(c.config.seed, c.geom, c.pair);
    {
      std::ofstream os = open_out(c.out_dir / "seed.obj");
      write_obj(os, seed.mesh, 0.0, 0);
    }
    const auto old = out.precision(9);
    out << "min_u=" << seed.min_u << "\n" << "min_u_perp=" << seed.min_u_perp << "\n";
    out.precision(old);
    return ExitCode::ok;
  });
}

}  // namespace ckflow

#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ckflow/config.hpp"
#include "ckflow/diagnostics.hpp"

namespace ckflow {

enum class ExitCode : int { ok = 0, assumptions = 1, flow = 2, nonconv = 3, config = 64 };

const char* status_name(ExitCode code);

struct AppOptions {
  std::string config_path;
  std::optional<std::string> out_dir;  // overrides output.dir
  bool force = false;  // run even when an assumption fails
  bool quiet = false;
};

// lambda band of the seed widened by 10% on each side, clipped to the domain
Shell seed_shell(const TriSurface& seed, const AmbientGeometry& geom, const KillingPair& pair);
Schedule make_schedule(const RunConfig& config, const AmbientGeometry& geom,
                       const KillingPair& pair, const Shell& shell);
// radii of the verified shell: explicit verify.r_min/r_max or the seed shell
Shell verify_shell(const RunConfig& config, const AmbientGeometry& geom, const KillingPair& pair,
                   const TriSurface& seed);

struct Verdict {
  IsoperimetricVerdict iso;
  double volume_final = 0.0;
  bool converged = false;
};
void write_verdict(std::ostream& os, const Verdict& v);

// Each command returns its exit code and never throws; `err` receives the STATUS line.
ExitCode cmd_run(const AppOptions& opt, std::ostream& out, std::ostream& err);
ExitCode cmd_verify(const AppOptions& opt, std::ostream& out, std::ostream& err);
ExitCode cmd_profile(const AppOptions& opt, std::ostream& out, std::ostream& err);
ExitCode cmd_seed(const AppOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace ckflow

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ckflow/app.hpp"

int main(int argc, char** argv) {
  using namespace ckflow;
  CLI::App app{"ckflow: conformal Killing flow runs, assumption checks and leaf profiles"};
  app.require_subcommand(1, 1);

  AppOptions opt;
  std::string out_dir;
  app.add_option("--config", opt.config_path, "config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_flag("--force", opt.force, "run even when an assumption check fails");
  app.add_flag("--quiet", opt.quiet, "suppress progress output");

  auto* run = app.add_subcommand("run", "verify, schedule and run the flow");
  auto* verify = app.add_subcommand("verify", "print the assumption report");
  auto* profile = app.add_subcommand("profile", "write the leaf area/volume profile");
  auto* seed = app.add_subcommand("seed", "write the seed mesh and its support minima");
  for (auto* sub : {run, verify, profile, seed}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "STATUS=config\n";
    return static_cast<int>(ExitCode::config);
  }
  if (!out_dir.empty()) opt.out_dir = out_dir;

  ExitCode code = ExitCode::config;
  if (*run) code = cmd_run(opt, std::cout, std::cerr);
  else if (*verify) code = cmd_verify(opt, std::cout, std::cerr);
  else if (*profile) code = cmd_profile(opt, std::cout, std::cerr);
  else if (*seed) code = cmd_seed(opt, std::cout, std::cerr);
  return static_cast<int>(code);
}

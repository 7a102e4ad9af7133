#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"
#include "ckflow/flow.hpp"
#include "ckflow/surface.hpp"

namespace ckflow {

enum class Backend { lagrangian, leaf_graph };
enum class ScheduleMode { automatic, fixed, off };

struct RunConfig {
  std::string geometry = "euclidean";
  double ball_radius = 1.0;

  Vec3 axis{1.0, 0.0, 0.0};
  double omega = 1.0;

  ScheduleMode schedule_mode = ScheduleMode::automatic;
  double t0 = 1.0;  // used when schedule_mode is fixed
  double margin = 0.1;

  SeedSpec seed;

  Backend backend = Backend::lagrangian;
  StepControl control;

  int frame_every = 0;
  std::string output_dir = "out";

  // shell for verify, in coordinate radii; unset means the seed band widened by 10%
  std::optional<double> verify_r_min;
  std::optional<double> verify_r_max;
  int verify_samples = 500;
  double verify_tol = 1e-5;

  std::optional<double> profile_r_min;
  std::optional<double> profile_r_max;
  int profile_points = 64;

  std::uint64_t rng_seed = 1;

  AmbientGeometry make_geometry() const;
  KillingPair make_pair() const;
};

// Flat INI text: optional [section] headers, `key = value` lines, `#` or `;` comments.
// Keys are addressed as section.key; unknown keys and malformed values throw ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// the accepted keys, in section.key form
const std::map<std::string, std::string>& config_keys();

}  // namespace ckflow

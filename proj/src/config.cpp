#include "ckflow/config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ckflow/errors.hpp"

namespace ckflow {

namespace {

namespace pt = boost::property_tree;

using Entries = std::map<std::string, std::string>;

Entries flatten(const pt::ptree& tree) {
  Entries out;
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      if (!out.emplace(key, child.data()).second) throw ConfigError("duplicate key " + key);
      continue;
    }
    if (!child.data().empty()) throw ConfigError("key " + key + " is also a section");
    for (const auto& [sub, leaf] : child) {
      if (!leaf.empty()) throw ConfigError("nested section under " + key);
      const std::string full = key + "." + sub;
      if (!out.emplace(full, leaf.data()).second) throw ConfigError("duplicate key " + full);
    }
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    return boost::lexical_cast<double>(boost::trim_copy(text));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

long to_long(const std::string& key, const std::string& text) {
  try {
    return boost::lexical_cast<long>(boost::trim_copy(text));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
}

Vec3 to_vec3(const std::string& key, const std::string& text) {
  std::string body = boost::trim_copy(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']')
    throw ConfigError(key + ": expected [x, y, z], got '" + text + "'");
  body = body.substr(1, body.size() - 2);
  std::vector<std::string> parts;
  boost::split(parts, body, boost::is_any_of(","));
  if (parts.size() != 3) throw ConfigError(key + ": expected three components");
  return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

const std::map<std::string, std::string>& config_keys() {
  static const std::map<std::string, std::string> keys = {
      {"geometry", "euclidean | paper_example | poincare_ball"},
      {"poincare_ball.radius", "ball radius (default 1)"},
      {"rotation.axis", "[ax, ay, az]"},
      {"rotation.omega", "angular speed"},
      {"schedule.t0", "auto | <number> | off"},
      {"schedule.margin", "safety margin in (0, 1)"},
      {"seed.kind", "sphere | ellipsoid | twisted"},
      {"seed.radius", "sphere radius"},
      {"seed.semiaxes", "[a, b, c]"},
      {"seed.tau", "twist rate"},
      {"seed.level", "icosphere level"},
      {"flow.backend", "lagrangian | leaf_graph"},
      {"flow.cfl", "CFL constant in (0, 0.5]"},
      {"flow.dt_max", "largest time step"},
      {"flow.t_end", "final time"},
      {"flow.speed_tol", "convergence tolerance on max |speed| / max H"},
      {"flow.leaf_tol", "convergence tolerance on leaf distance"},
      {"flow.smooth_every", "steps between tangential smoothing passes (0 = off)"},
      {"flow.max_steps", "step limit"},
      {"output.frame_every", "steps between OBJ frames (0 = first and last)"},
      {"output.dir", "output directory"},
      {"verify.r_min", "inner coordinate radius of the verified shell"},
      {"verify.r_max", "outer coordinate radius of the verified shell"},
      {"verify.samples", "sample points per condition"},
      {"verify.tol", "relative tolerance"},
      {"profile.r_min", "smallest radius of the leaf profile"},
      {"profile.r_max", "largest radius of the leaf profile"},
      {"profile.points", "number of radii"},
      {"rng.seed", "sampling seed"},
  };
  return keys;
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  const Entries entries = flatten(tree);
  for (const auto& [key, value] : entries)
    if (!config_keys().count(key)) throw ConfigError("unknown key " + key);

  RunConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  if (auto v = get("geometry")) c.geometry = boost::trim_copy(*v);
  require(c.geometry == "euclidean" || c.geometry == "paper_example" ||
              c.geometry == "poincare_ball",
          "geometry: unknown kind '" + c.geometry + "'");
  if (auto v = get("poincare_ball.radius")) c.ball_radius = to_double("poincare_ball.radius", *v);
  require(c.ball_radius > 0.0, "poincare_ball.radius must be positive");

  if (auto v = get("rotation.axis")) c.axis = to_vec3("rotation.axis", *v);
  require(c.axis.norm() > 0.0, "rotation.axis must be nonzero");
  if (auto v = get("rotation.omega")) c.omega = to_double("rotation.omega", *v);

  if (auto v = get("schedule.t0")) {
    const std::string s = boost::trim_copy(*v);
    if (s == "auto") {
      c.schedule_mode = ScheduleMode::automatic;
    } else if (s == "off") {
      c.schedule_mode = ScheduleMode::off;
    } else {
      c.schedule_mode = ScheduleMode::fixed;
      c.t0 = to_double("schedule.t0", s);
      require(c.t0 > 0.0, "schedule.t0 must be positive");
    }
  }
  if (auto v = get("schedule.margin")) c.margin = to_double("schedule.margin", *v);
  require(c.margin > 0.0 && c.margin < 1.0, "schedule.margin must lie in (0, 1)");

  if (auto v = get("seed.kind")) {
    const std::string s = boost::trim_copy(*v);
    if (s == "sphere") c.seed.kind = SeedKind::sphere;
    else if (s == "ellipsoid") c.seed.kind = SeedKind::ellipsoid;
    else if (s == "twisted") c.seed.kind = SeedKind::twisted;
    else throw ConfigError("seed.kind: unknown kind '" + s + "'");
  }
  if (auto v = get("seed.radius")) c.seed.radius = to_double("seed.radius", *v);
  if (auto v = get("seed.semiaxes")) c.seed.semiaxes = to_vec3("seed.semiaxes", *v);
  if (auto v = get("seed.tau")) c.seed.tau = to_double("seed.tau", *v);
  if (auto v = get("seed.level")) c.seed.level = static_cast<int>(to_long("seed.level", *v));
  require(c.seed.radius > 0.0, "seed.radius must be positive");
  require(c.seed.semiaxes.minCoeff() > 0.0, "seed.semiaxes must be positive");
  require(c.seed.tau >= 0.0, "seed.tau must be >= 0");
  require(c.seed.level >= 0 && c.seed.level <= 7, "seed.level must lie in [0, 7]");

  if (auto v = get("flow.backend")) {
    const std::string s = boost::trim_copy(*v);
    if (s == "lagrangian") c.backend = Backend::lagrangian;
    else if (s == "leaf_graph") c.backend = Backend::leaf_graph;
    else throw ConfigError("flow.backend: unknown backend '" + s + "'");
  }
  if (auto v = get("flow.cfl")) c.control.cfl = to_double("flow.cfl", *v);
  if (auto v = get("flow.dt_max")) c.control.dt_max = to_double("flow.dt_max", *v);
  if (auto v = get("flow.t_end")) c.control.t_end = to_double("flow.t_end", *v);
  if (auto v = get("flow.speed_tol")) c.control.speed_tol = to_double("flow.speed_tol", *v);
  if (auto v = get("flow.leaf_tol")) c.control.leaf_tol = to_double("flow.leaf_tol", *v);
  if (auto v = get("flow.smooth_every"))
    c.control.smooth_every = static_cast<int>(to_long("flow.smooth_every", *v));
  if (auto v = get("flow.max_steps")) c.control.max_steps = to_long("flow.max_steps", *v);
  c.control.validate();
  require(c.control.max_steps > 0, "flow.max_steps must be positive");

  if (auto v = get("output.frame_every"))
    c.frame_every = static_cast<int>(to_long("output.frame_every", *v));
  require(c.frame_every >= 0, "output.frame_every must be >= 0");
  if (auto v = get("output.dir")) c.output_dir = boost::trim_copy(*v);
  require(!c.output_dir.empty(), "output.dir must not be empty");

  if (auto v = get("verify.r_min")) c.verify_r_min = to_double("verify.r_min", *v);
  if (auto v = get("verify.r_max")) c.verify_r_max = to_double("verify.r_max", *v);
  require(c.verify_r_min.has_value() == c.verify_r_max.has_value(),
          "verify.r_min and verify.r_max must be given together");
  if (c.verify_r_min)
    require(*c.verify_r_min > 0.0 && *c.verify_r_min < *c.verify_r_max,
            "verify shell needs 0 < r_min < r_max");
  if (auto v = get("verify.samples"))
    c.verify_samples = static_cast<int>(to_long("verify.samples", *v));
  require(c.verify_samples > 0, "verify.samples must be positive");
  if (auto v = get("verify.tol")) c.verify_tol = to_double("verify.tol", *v);
  require(c.verify_tol > 0.0, "verify.tol must be positive");

  if (auto v = get("profile.r_min")) c.profile_r_min = to_double("profile.r_min", *v);
  if (auto v = get("profile.r_max")) c.profile_r_max = to_double("profile.r_max", *v);
  require(c.profile_r_min.has_value() == c.profile_r_max.has_value(),
          "profile.r_min and profile.r_max must be given together");
  if (c.profile_r_min)
    require(*c.profile_r_min > 0.0 && *c.profile_r_min < *c.profile_r_max,
            "profile range needs 0 < r_min < r_max");
  if (auto v = get("profile.points"))
    c.profile_points = static_cast<int>(to_long("profile.points", *v));
  require(c.profile_points >= 2, "profile.points must be >= 2");

  if (auto v = get("rng.seed")) {
    const long s = to_long("rng.seed", *v);
    require(s >= 0, "rng.seed must be >= 0");
    c.rng_seed = static_cast<std::uint64_t>(s);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

AmbientGeometry RunConfig::make_geometry() const {
  return AmbientGeometry::from_name(geometry, ball_radius);
}

KillingPair RunConfig::make_pair() const { return KillingPair(axis, omega); }

}  // namespace ckflow

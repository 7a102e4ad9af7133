#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "ckflow/app.hpp"
#include "ckflow/config.hpp"
#include "ckflow/errors.hpp"

using namespace ckflow;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ckflow_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

Result cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(CKFLOW_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_CASE("config: defaults and sections") {
  const RunConfig c = parse(
      "geometry = paper_example\n"
      "[rotation]\naxis = [1, 0, 0]\nomega = 0.5\n"
      "[schedule]\nt0 = off\n"
      "[seed]\nkind = twisted\nsemiaxes = [1.6, 0.7, 0.7]\ntau = 1.2\nlevel = 3\n"
      "[flow]\nbackend = leaf_graph\ncfl = 0.2\nsmooth_every = 0\n"
      "# comment\n; another\n"
      "[output]\nframe_every = 25\n");
  CHECK(c.geometry == "paper_example");
  CHECK(c.omega == 0.5);
  CHECK(c.schedule_mode == ScheduleMode::off);
  CHECK(c.seed.kind == SeedKind::twisted);
  CHECK(c.seed.semiaxes.isApprox(Vec3(1.6, 0.7, 0.7)));
  CHECK(c.seed.level == 3);
  CHECK(c.backend == Backend::leaf_graph);
  CHECK(c.control.cfl == 0.2);
  CHECK(c.control.smooth_every == 0);
  CHECK(c.frame_every == 25);
  CHECK(c.verify_samples == 500);
  CHECK(parse("[schedule]\nt0 = 2.5\n").t0 == 2.5);
  CHECK(parse("poincare_ball.radius = 3\ngeometry = poincare_ball\n").ball_radius == 3.0);
}

TEST_CASE("config: errors") {
  CHECK_THROWS_AS(parse("[flow]\nspeed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("geometry = torus\n"), ConfigError);
  CHECK_THROWS_AS(parse("[rotation]\naxis = [1, 0]\n"), ConfigError);
  CHECK_THROWS_AS(parse("[flow]\ncfl = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse("[flow]\ncfl = 0.9\n"), ConfigError);
  CHECK_THROWS_AS(parse("[seed\nkind = sphere\n"), ConfigError);
  CHECK_THROWS_AS(parse("[verify]\nr_min = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/ckflow.ini"), ConfigError);
}

TEST_CASE("cli: malformed config exits 64") {
  const fs::path dir = scratch_dir("malformed");
  const fs::path cfg = write_config(dir, "[flow]\nbogus_key = 1\n");
  const Result r = cli("verify --config " + cfg.string(), dir);
  CHECK(r.code == 64);
  CHECK(r.err.find("unknown key flow.bogus_key") != std::string::npos);
  CHECK(r.err.find("STATUS=config\n") != std::string::npos);
  CHECK(cli("frobnicate --config " + cfg.string(), dir).code == 64);
}

TEST_CASE("cli: verify on the conformal example") {
  const fs::path dir = scratch_dir("verify");
  const fs::path cfg = write_config(
      dir, "geometry = paper_example\n[verify]\nr_min = 0.3\nr_max = 1.8\nsamples = 200\n");
  const Result r = cli("verify --config " + cfg.string(), dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.err.find("STATUS=ok") != std::string::npos);
}

TEST_CASE("cli: run with a non-Killing axis exits 1") {
  const fs::path dir = scratch_dir("axis");
  const fs::path cfg = write_config(dir,
                                    "geometry = paper_example\n[rotation]\naxis = [0, 0, 1]\n"
                                    "[seed]\nkind = sphere\nlevel = 2\n[verify]\nsamples = 100\n");
  const Result r = cli("run --quiet --config " + cfg.string() + " --out " + (dir / "o").string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("STATUS=assumptions") != std::string::npos);
}

TEST_CASE("cli: profile writes r,area,volume") {
  const fs::path dir = scratch_dir("profile");
  const fs::path cfg = write_config(dir, "[profile]\nr_min = 0.5\nr_max = 2\npoints = 7\n");
  const Result r = cli("profile --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 0);
  std::ifstream in(dir / "profile.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "r,area,volume");
  int rows = 0;
  while (std::getline(in, line)) {
    double rr, a, v;
    char c1, c2;
    std::istringstream ls(line);
    ls >> rr >> c1 >> a >> c2 >> v;
    CHECK(std::abs(a / (4 * std::numbers::pi * rr * rr) - 1) <= 5e-3);
    ++rows;
  }
  CHECK(rows == 7);
}

TEST_CASE("cli: seed reports the support minima") {
  const fs::path dir = scratch_dir("seed");
  const fs::path cfg = write_config(dir,
                                    "[rotation]\naxis = [0, 0, 1]\n"
                                    "[seed]\nkind = twisted\nsemiaxes = [1.6, 0.7, 0.7]\n"
                                    "tau = 1.2\nlevel = 3\n");
  const Result r = cli("seed --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 0);
  const auto u = r.out.find("min_u=");
  const auto up = r.out.find("min_u_perp=");
  REQUIRE(u != std::string::npos);
  REQUIRE(up != std::string::npos);
  CHECK(std::stod(r.out.substr(u + 6)) > 0.0);
  CHECK(std::stod(r.out.substr(up + 11)) < 0.0);
  CHECK(fs::exists(dir / "seed.obj"));
}

TEST_CASE("cli: unscheduled twisted seed is a flow error") {
  const fs::path dir = scratch_dir("unscheduled");
  const fs::path cfg = write_config(dir,
                                    "[rotation]\naxis = [0, 0, 1]\n[schedule]\nt0 = off\n"
                                    "[seed]\nkind = twisted\nsemiaxes = [1.6, 0.7, 0.7]\n"
                                    "tau = 1.2\nlevel = 3\n[verify]\nsamples = 100\n");
  const Result r = cli("run --quiet --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("starshapedness") != std::string::npos);
  CHECK(r.err.find("STATUS=flow") != std::string::npos);
}

TEST_CASE("cli: short run is deterministic and reports non-convergence") {
  const std::string text =
      "[seed]\nkind = ellipsoid\nsemiaxes = [1.3, 1, 1]\nlevel = 2\n"
      "[flow]\nt_end = 0.05\n[output]\nframe_every = 20\n[verify]\nsamples = 100\n";
  std::string first;
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = scratch_dir("det" + std::to_string(k));
    const fs::path cfg = write_config(dir, text);
    const Result r = cli("run --quiet --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("STATUS=nonconv") != std::string::npos);
    CHECK(fs::exists(dir / "frame_0.obj"));
    CHECK(fs::exists(dir / "frame_1.obj"));
    const std::string verdict = slurp(dir / "verdict.txt");
    for (const char* key : {"area_initial=", "area_final=", "volume_initial=", "volume_final=",
                            "area_leaf_equal_volume=", "isoperimetric_pass=", "converged=false"})
      CHECK(verdict.find(key) != std::string::npos);
    const std::string trace = slurp(dir / "trace.csv");
    if (k == 0) first = trace;
    else CHECK(trace == first);
  }
}

TEST_CASE("cli: a near-leaf run converges with exit 0") {
  const fs::path dir = scratch_dir("converge");
  const fs::path cfg = write_config(dir,
                                    "[seed]\nkind = ellipsoid\nsemiaxes = [1.05, 1, 1]\nlevel = 2\n"
                                    "[flow]\nt_end = 5\n[verify]\nsamples = 100\n");
  const Result r = cli("run --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 0);
  CHECK(r.err.find("STATUS=ok") != std::string::npos);
  const std::string verdict = slurp(dir / "verdict.txt");
  CHECK(verdict.find("converged=true") != std::string::npos);
  CHECK(verdict.find("isoperimetric_pass=true") != std::string::npos);
}

#include <doctest.h>

#include <cmath>

#include "ckflow/errors.hpp"
#include "ckflow/flow.hpp"

using namespace ckflow;

namespace {

const KillingPair kE1(Vec3(1, 0, 0), 1.0);

FlowState start(const TriSurface& mesh, bool schedule = true) {
  Schedule s;
  s.t0 = 1.0;
  s.enabled = schedule;
  return FlowState{0.0, mesh, s, 0};
}

}  // namespace

TEST_CASE("speed vanishes on coordinate spheres") {
  const auto g = AmbientGeometry::euclidean();
  for (double r : {0.5, 1.0, 2.0}) {
    const auto vg = mesh_geometry(sphere(r, 4), g, kE1, 1.0);
    double hmax = 0.0, smax = 0.0;
    for (const auto& v : vg) {
      hmax = std::max(hmax, v.H);
      smax = std::max(smax, std::abs(speed(v, v.phi)));
    }
    CHECK(smax <= 1e-2 * hmax);
  }
}

TEST_CASE("rotation does not move a sphere") {
  const auto g = AmbientGeometry::euclidean();
  for (const auto& v : mesh_geometry(icosphere(3), g, KillingPair(Vec3(0.3, 0.4, 1.0), 1.0), 1.0)) {
    CHECK(std::abs(v.u_top) < 1e-12);
    CHECK(std::abs(speed(v, v.phi)) <= 1e-2 * v.H);
  }
}

TEST_CASE("one step on the unit sphere is a numerical zero") {
  const auto g = AmbientGeometry::euclidean();
  StepControl c;
  c.smooth_every = 0;
  const FlowState s0 = start(icosphere(4));
  const double dt = stable_dt(s0, g, kE1, c);
  const FlowState s1 = step_lagrangian(s0, g, kE1, dt, c);
  for (std::size_t i = 0; i < s0.mesh.num_vertices(); ++i)
    CHECK((s1.mesh.vertices()[i] - s0.mesh.vertices()[i]).norm() <= 1e-2 * dt * 2.0);
  CHECK(s1.step == 1);
  CHECK(s1.t == doctest::Approx(dt));
}

TEST_CASE("one step on an ellipsoid does not increase area") {
  const auto g = AmbientGeometry::euclidean();
  StepControl c;
  c.smooth_every = 0;
  FlowState s = start(ellipsoid(Vec3(1.3, 1, 1), 4));
  for (int k = 0; k < 5; ++k) {
    const double a0 = area(s.mesh, g);
    s = step_lagrangian(s, g, kE1, stable_dt(s, g, kE1, c), c);
    CHECK(area(s.mesh, g) <= a0 * (1 + 1e-8));
  }
}

TEST_CASE("the step respects the parabolic CFL bound") {
  const auto g = AmbientGeometry::paper_example();
  StepControl c;
  const FlowState s = start(sphere(1.0, 3));
  const double h = s.mesh.min_edge_length();
  CHECK(stable_dt(s, g, kE1, c) <= c.cfl * h * h + 1e-15);
}

TEST_CASE("reversed orientation is rejected") {
  const auto g = AmbientGeometry::euclidean();
  StepControl c;
  CHECK_THROWS_AS(step_lagrangian(start(icosphere(2).flipped()), g, kE1, 1e-4, c), InvariantViolation);
}

TEST_CASE("twisted seed without the schedule is not starshaped") {
  const auto g = AmbientGeometry::euclidean();
  const KillingPair e3(Vec3(0, 0, 1), 1.0);
  const SeedResult seed = twisted_seed(Vec3(1.6, 0.7, 0.7), 1.2, 3, g, e3);
  CHECK_THROWS_AS(check_starshaped(seed.mesh, g, e3, 0.0), StarshapeLost);
  CHECK_NOTHROW(check_starshaped(seed.mesh, g, e3, 1.0));
  FlowRun run(g, e3, start(seed.mesh, false), StepControl{});
  CHECK_THROWS_AS(run.run(), StarshapeLost);
}

TEST_CASE("short ellipsoid run keeps volume and the lambda band") {
  const auto g = AmbientGeometry::euclidean();
  StepControl c;
  c.t_end = 0.05;
  FlowRun run(g, kE1, start(ellipsoid(Vec3(1.3, 1, 1), 3)), c);
  CHECK_FALSE(run.run());
  const auto& rows = run.trace().rows;
  REQUIRE(rows.size() > 2);
  CHECK(rows.back().time == doctest::Approx(0.05));
  CHECK(std::abs(rows.back().volume / rows.front().volume - 1) < 1e-3);
  CHECK(rows.back().area < rows.front().area);
  CHECK(run.band_excursion() <= 1e-3);
}

TEST_CASE("step control validation") {
  StepControl c;
  c.cfl = 0.8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.cfl = 0.25;
  c.t_end = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("steps keep the conformal volume") {
  const auto g = AmbientGeometry::paper_example();
  StepControl c;
  c.smooth_every = 3;
  FlowState s = start(ellipsoid(Vec3(1.1, 1.0, 0.95), 3));
  const double v0 = volume(s.mesh, g);
  for (int k = 0; k < 6; ++k) s = step_lagrangian(s, g, kE1, stable_dt(s, g, kE1, c), c);
  CHECK(std::abs(volume(s.mesh, g) / v0 - 1) < 1e-6);
}

TEST_CASE("volume restore reaches the target") {
  const auto g = AmbientGeometry::paper_example();
  TriSurface m = sphere(1.0, 3);
  const double target = 1.01 * volume(m, g);
  restore_volume(m, g, target);
  CHECK(std::abs(volume(m, g) / target - 1) < 1e-7);
}

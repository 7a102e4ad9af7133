#include <doctest.h>

#include <cmath>
#include <random>

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"
#include "ckflow/errors.hpp"

using namespace ckflow;

namespace {

Vec3 random_point(std::mt19937_64& rng, double r_max) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vec3 p(u(rng), u(rng), u(rng));
    if (p.norm() > 0.1 && p.norm() < 1.0) return r_max * p;
  }
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("euclidean metric is the identity") {
  const auto g = AmbientGeometry::euclidean();
  CHECK(max_abs(metric_at(g, Vec3(0.3, -2.0, 5.0)) - Mat3::Identity()) == 0.0);
  CHECK(grad_f(g, Vec3(1, 2, 3)).norm() == 0.0);
  CHECK(max_abs(ricci_at(g, Vec3(1, 2, 3))) == 0.0);
}

TEST_CASE("conformal example factor") {
  const auto g = AmbientGeometry::paper_example();
  const Vec3 p(0.4, -0.3, 0.2);
  const double expected = -std::log(std::pow(p.x() - 2.0, 2) + p.y() * p.y() + p.z() * p.z());
  CHECK(g.f(p) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(max_abs(metric_at(g, p) - std::exp(2 * expected) * Mat3::Identity()) < 1e-12);
}

TEST_CASE("metric is positive definite on sampled domain points") {
  std::mt19937_64 rng(7);
  for (const auto& g : {AmbientGeometry::euclidean(), AmbientGeometry::paper_example(),
                        AmbientGeometry::poincare_ball(1.0)}) {
    const double r = std::isfinite(g.outer_radius()) ? 0.9 * g.outer_radius() : 3.0;
    for (int i = 0; i < 50; ++i) {
      Eigen::SelfAdjointEigenSolver<Mat3> es(metric_at(g, random_point(rng, r)));
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("closed-form gradient of f agrees with finite differences") {
  std::mt19937_64 rng(11);
  for (const auto& g : {AmbientGeometry::paper_example(), AmbientGeometry::poincare_ball(1.0)}) {
    for (int i = 0; i < 30; ++i) {
      const Vec3 p = random_point(rng, 0.9 * g.outer_radius());
      const Vec3 fd = gradient_fd([&](const Vec3& q) { return g.f(q); }, p, 1e-5);
      CHECK((fd - g.grad_f(p)).norm() < 1e-6 * (1.0 + fd.norm()));
    }
  }
}

TEST_CASE("Christoffel symbols: closed form versus metric differences") {
  std::mt19937_64 rng(3);
  for (const auto& g : {AmbientGeometry::paper_example(), AmbientGeometry::poincare_ball(1.0)}) {
    for (int i = 0; i < 20; ++i) {
      const Vec3 p = random_point(rng, 0.8 * g.outer_radius());
      const auto a = christoffels_at(g, p);
      const auto b = christoffels_fd(g, p);
      double scale = 1.0, err = 0.0;
      for (int k = 0; k < 3; ++k) {
        scale = std::max(scale, max_abs(a[k]));
        err = std::max(err, max_abs(a[k] - b[k]));
      }
      CHECK(err < 1e-5 * scale);
    }
  }
}

TEST_CASE("Ricci tensor: flat examples vanish and the ball is Einstein") {
  std::mt19937_64 rng(5);
  const auto pe = AmbientGeometry::paper_example();
  const auto ball = AmbientGeometry::poincare_ball(1.0);
  for (int i = 0; i < 10; ++i) {
    const Vec3 p = random_point(rng, 0.7);
    CHECK(max_abs(ricci_at(pe, p)) == 0.0);
    const Mat3 g = metric_at(pe, p);
    CHECK(max_abs(ricci_fd(pe, p)) < 1e-4 * max_abs(g));
    CHECK(max_abs(ricci_conformal(pe, p)) < 1e-6 * max_abs(g));

    const Mat3 gb = metric_at(ball, p);
    CHECK(max_abs(ricci_at(ball, p) + 2.0 * gb) < 1e-12 * max_abs(gb));
    CHECK(max_abs(ricci_fd(ball, p) + 2.0 * gb) < 1e-4 * max_abs(gb));
    CHECK(max_abs(ricci_conformal(ball, p) + 2.0 * gb) < 1e-6 * max_abs(gb));
  }
}

TEST_CASE("hessian of a linear function vanishes in euclidean space") {
  const auto g = AmbientGeometry::euclidean();
  const ScalarField lin = [](const Vec3& p) { return 2.0 * p.x() - 3.0 * p.y() + 0.5 * p.z() + 1; };
  CHECK(max_abs(hessian_scalar(g, lin, Vec3(0.7, 1.1, -0.4))) < 1e-6);
  const ScalarField one = [](const Vec3&) { return 1.0; };
  CHECK(max_abs(hessian_scalar(g, one, Vec3(0.7, 1.1, -0.4))) == 0.0);
}

TEST_CASE("the dilation is conformal and the rotation Killing") {
  std::mt19937_64 rng(13);
  const KillingPair e1(Vec3(1, 0, 0), 1.0);
  for (const auto& g : {AmbientGeometry::euclidean(), AmbientGeometry::paper_example(),
                        AmbientGeometry::poincare_ball(1.0)}) {
    const double r = std::isfinite(g.outer_radius()) ? 0.8 * g.outer_radius() : 2.0;
    for (int i = 0; i < 100; ++i) {
      const Vec3 p = random_point(rng, r);
      const Mat3 gm = metric_at(g, p);
      const Mat3 lp = lie_derivative_metric(g, [&](const Vec3& q) { return e1.perp(q); }, p);
      CHECK(max_abs(lp - 2.0 * eval_phi(g, e1, p) * gm) <= 1e-5 * (1.0 + max_abs(gm)));
      const Mat3 lt = lie_derivative_metric(g, [&](const Vec3& q) { return e1.top(q); }, p);
      CHECK(max_abs(lt) <= 1e-5 * (1.0 + max_abs(gm)));
    }
  }
}

TEST_CASE("rotation about a non-symmetry axis is not Killing for the conformal example") {
  const auto g = AmbientGeometry::paper_example();
  const KillingPair e3(Vec3(0, 0, 1), 1.0);
  const Vec3 p(0.5, 0.4, 0.3);
  const Mat3 lt = lie_derivative_metric(g, [&](const Vec3& q) { return e3.top(q); }, p);
  CHECK(max_abs(lt) > 1e-2);
}

TEST_CASE("points outside the domain raise DomainExit") {
  CHECK_THROWS_AS(AmbientGeometry::poincare_ball(1.0).require(Vec3(1.2, 0, 0)), DomainExit);
  CHECK_THROWS_AS(AmbientGeometry::paper_example().require(Vec3(2.5, 0, 0)), DomainExit);
  CHECK_NOTHROW(AmbientGeometry::poincare_ball(1.0).require(Vec3(0.5, 0, 0)));
  CHECK_THROWS_AS(ricci_fd(AmbientGeometry::poincare_ball(1.0), Vec3(0, 0, 1.5)), DomainExit);
}

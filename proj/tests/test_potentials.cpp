#include <doctest.h>

#include <cmath>
#include <random>

#include "ipla/potentials.hpp"

using namespace ipla;

namespace {

Point vec(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

Point random_point(std::mt19937_64& rng, std::size_t d, double scale) {
  std::normal_distribution<double> n;
  Point x(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = scale * n(rng);
  return x;
}

void check_gradient(const Potential& v, const Point& x) {
  const Point g = v.gradient(x);
  const double h = 1e-5 * (1.0 + x.norm());
  Point fd(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Point a = x, b = x;
    a[i] += h;
    b[i] -= h;
    fd[i] = (v.value(a) - v.value(b)) / (2.0 * h);
  }
  CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
}

void check_hessian(const Potential& v, const Point& x, const Point& dir) {
  const Point hv = v.hessian_vec(x, dir);
  const double h = 1e-5 * (1.0 + x.norm());
  const Point fd = (v.gradient(x + h * dir) - v.gradient(x - h * dir)) / (2.0 * h);
  CHECK((fd - hv).norm() <= 1e-4 * std::max(1.0, hv.norm()));
}

}  // namespace

TEST_CASE("quartic and gaussian values") {
  CHECK(GaussianPotential(3).value(Point::Zero(3)) == 0.0);
  CHECK(QuarticPotential(2).value(vec({1, 1})) == doctest::Approx(0.5));
  CHECK(QuarticPotential(1).value(vec({2})) == doctest::Approx(4.0));
  CHECK(GaussianPotential(2).value(vec({1, -2})) == doctest::Approx(2.5));
}

TEST_CASE("quartic and gaussian gradients and hessian products") {
  QuarticPotential q3(3);
  CHECK(q3.gradient(vec({1, -2, 0})) == vec({1, -8, 0}));
  GaussianPotential g2(2);
  CHECK(g2.gradient(vec({0.3, -4})) == vec({0.3, -4}));
  QuarticPotential q2(2);
  CHECK(q2.hessian_vec(vec({1, 1}), vec({1, 0})) == vec({3, 0}));
  CHECK(q2.hessian_vec(vec({2, 0}), vec({0, 1})) == vec({0, 0}));
  CHECK(g2.hessian_vec(vec({5, 7}), vec({-1, 2})) == vec({-1, 2}));
}

TEST_CASE("gradient vanishes at the declared minimizer") {
  QuarticPotential q(7);
  GaussianPotential g(7);
  REQUIRE(q.profile().minimizer);
  REQUIRE(g.profile().minimizer);
  CHECK(q.gradient(*q.profile().minimizer).norm() == 0.0);
  CHECK(g.gradient(*g.profile().minimizer).norm() == 0.0);

  GinzburgLandauPotential gl({0.1, 0.5, 2.0, 3});
  REQUIRE(gl.profile().minimizer);
  CHECK(gl.gradient(*gl.profile().minimizer).norm() < 1e-12);
  GinzburgLandauPotential gl_convex({0.1, 0.5, 0.5, 3});
  CHECK(gl_convex.profile().minimizer->norm() == 0.0);
}

TEST_CASE("ginzburg-landau critical point at the origin") {
  GinzburgLandauPotential gl({0.1, 0.5, 2.0, 2});
  CHECK(gl.dim() == 8);
  CHECK(gl.gradient(Point::Zero(8)).norm() == 0.0);
  CHECK(gl.value(Point::Zero(8)) == 0.0);
}

TEST_CASE("ginzburg-landau value matches a direct lattice sum") {
  const GinzburgLandauParams p{0.1, 0.5, 2.0, 3};
  GinzburgLandauPotential gl(p);
  std::mt19937_64 rng(3);
  const Point x = random_point(rng, 27, 1.0);
  auto at = [&](int i, int j, int k) { return x[((i % 3) * 3 + (j % 3)) * 3 + (k % 3)]; };
  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const double c = at(i, j, k);
        const double di = at(i + 1, j, k) - c, dj = at(i, j + 1, k) - c, dk = at(i, j, k + 1) - c;
        expected += 0.5 * (1.0 - p.upsilon) * c * c +
                    0.5 * p.upsilon * p.varkappa * (di * di + dj * dj + dk * dk) +
                    0.25 * p.upsilon * p.varsigma * c * c * c * c;
      }
  CHECK(gl.value(x) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("ginzburg-landau is invariant under lattice translation") {
  GinzburgLandauPotential gl({0.1, 0.5, 2.0, 4});
  std::mt19937_64 rng(5);
  const Point x = random_point(rng, 64, 1.0);
  Point shifted(64);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) shifted[((i + 1) % 4 * 4 + j) * 4 + (k + 3) % 4] = x[(i * 4 + j) * 4 + k];
  CHECK(gl.value(shifted) == doctest::Approx(gl.value(x)).epsilon(1e-13));
}

TEST_CASE("gradient and hessian products match finite differences") {
  std::mt19937_64 rng(11);
  QuarticPotential q(6);
  GaussianPotential g(6);
  GinzburgLandauPotential gl({0.1, 0.5, 2.0, 3});
  for (int t = 0; t < 20; ++t) {
    const Point x6 = random_point(rng, 6, 2.0);
    const Point d6 = random_point(rng, 6, 1.0);
    check_gradient(q, x6);
    check_gradient(g, x6);
    check_hessian(q, x6, d6);
    check_hessian(g, x6, d6);
    const Point x27 = random_point(rng, 27, 1.5);
    check_gradient(gl, x27);
    check_hessian(gl, x27, random_point(rng, 27, 1.0));
  }
}

TEST_CASE("convexity spot check on the convex potentials") {
  std::mt19937_64 rng(13);
  QuarticPotential q(5);
  GaussianPotential g(5);
  for (int t = 0; t < 500; ++t) {
    const Point x = random_point(rng, 5, 3.0), y = random_point(rng, 5, 3.0);
    for (const Potential* v : {static_cast<const Potential*>(&q), static_cast<const Potential*>(&g)}) {
      CHECK(v->value(x) >= v->value(y) + v->gradient(y).dot(x - y) - 1e-9 * (1.0 + (x - y).squaredNorm()));
    }
  }
}

TEST_CASE("growth-condition spot check with the declared c_v") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  QuarticPotential q(4);
  GaussianPotential g(4);
  GinzburgLandauPotential gl({0.1, 0.5, 2.0, 2});
  for (const Potential* v : {static_cast<const Potential*>(&q), static_cast<const Potential*>(&g),
                             static_cast<const Potential*>(&gl)}) {
    const auto& p = v->profile();
    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
      Point x(v->dim()), y(v->dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = box(rng);
        y[i] = box(rng);
      }
      const double rhs = v->value(x) + v->gradient(x).dot(y - x) +
                         p.c_v * (1.0 + std::pow(x.norm(), p.q_v - 1.0) + std::pow(y.norm(), p.q_v - 1.0)) *
                             (y - x).squaredNorm();
      if (v->value(y) > rhs * (1.0 + 1e-12) + 1e-9) ++violations;
    }
    CHECK_MESSAGE(violations == 0, v->name());
  }
}

TEST_CASE("ginzburg-landau metadata") {
  GinzburgLandauPotential gl({0.1, 0.5, 2.0, 3});
  const auto& p = gl.profile();
  CHECK(p.q_v == 3.0);
  CHECK(p.hessian_floor == doctest::Approx(-1.0));
  CHECK(p.lambda_v > 0.0);
  CHECK(p.r_v > 0.0);
  // The Hessian at the origin has smallest eigenvalue 1 - upsilon.
  CHECK(gl.min_hessian_eigenvalue(Point::Zero(27)) == doctest::Approx(-1.0).epsilon(1e-8));
  // Outside the declared ball the sampled curvature is at least lambda_v.
  std::mt19937_64 rng(19);
  for (int t = 0; t < 10; ++t) {
    Point z = random_point(rng, 27, 1.0);
    z *= 2.0 * p.r_v / z.norm();
    CHECK(gl.min_hessian_eigenvalue(z) >= p.lambda_v * (1.0 - 1e-9));
  }
}

TEST_CASE("evaluation errors") {
  QuarticPotential q(3);
  CHECK_THROWS_AS(q.value(Point::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(q.gradient(Point::Zero(4)), std::invalid_argument);
  Point bad = Point::Zero(3);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(q.value(bad), std::domain_error);
  bad[1] = INFINITY;
  CHECK_THROWS_AS(q.gradient(bad), std::domain_error);
  CHECK_THROWS_AS(QuarticPotential(0), std::invalid_argument);
}

TEST_CASE("total variation") {
  CHECK(tv(Point::Constant(16, 0.7), 4) == 0.0);
  CHECK(tv(vec({0, 1, 0, 1}), 2) == doctest::Approx(2.0));
  CHECK(tv(vec({0, 0, 0, 1}), 2) == doctest::Approx(2.0));
  // 3x3: interior terms use both forward differences.
  const Point img = vec({0, 1, 0, 2, 0, 0, 0, 0, 3});
  const double interior = std::sqrt(1 + 4) + std::sqrt(1 + 1) + std::sqrt(4 + 4) + 0.0;
  const double last_row = 0.0 + 3.0, last_col = 0.0 + 3.0;
  CHECK(tv(img, 3) == doctest::Approx(interior + last_row + last_col));
  CHECK_THROWS_AS(tv(Point::Zero(5), 2), std::invalid_argument);
}

TEST_CASE("total variation is one-homogeneous") {
  std::mt19937_64 rng(23);
  const Point img = random_point(rng, 36, 1.0);
  for (double c : {-3.0, -0.5, 0.0, 2.0, 10.0}) {
    CHECK(tv(c * img, 6) == doctest::Approx(std::abs(c) * tv(img, 6)).epsilon(1e-12));
  }
}

TEST_CASE("deconvolution potential") {
  auto blur = std::make_shared<const CirculantBlur>(CirculantBlur::identity(4));
  std::mt19937_64 rng(29);
  const Point y = random_point(rng, 16, 1.0);
  const Point x = random_point(rng, 16, 1.0);
  DeconvolutionPotential v(blur, y, 0.5, 0.1);
  CHECK(v.value(x) == doctest::Approx((y - x).squaredNorm() / (2 * 0.25) + 0.1 * tv(x, 4)));
  CHECK_FALSE(v.profile().smooth);
  CHECK_THROWS_AS(v.gradient(x), UnsupportedOperation);
  CHECK_THROWS_AS(v.hessian_vec(x, x), UnsupportedOperation);
  DeconvolutionPotential off(blur, y, INFINITY, 0.0);
  CHECK(off.precision() == 0.0);
  CHECK(off.value(x) == 0.0);
}

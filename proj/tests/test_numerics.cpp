#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reslstm/numerics.hpp"

using namespace reslstm;

TEST_CASE("affine identity, hand arithmetic, zero matrix") {
  Matrix I = identity(2);
  CHECK(affine(I, {1.0, 2.0}, {0.0, 0.0}) == Vector{1.0, 2.0});

  Matrix W(2, 2);
  W.at(0, 0) = 1; W.at(0, 1) = 1;
  W.at(1, 0) = 1; W.at(1, 1) = -1;
  CHECK(affine(W, {3.0, 2.0}, {1.0, 0.0}) == Vector{6.0, 1.0});

  Matrix Z(3, 4);
  CHECK(affine(Z, {9.0, 8.0, 7.0, 6.0}, {5.0, 6.0, 7.0}) == Vector{5.0, 6.0, 7.0});
}

TEST_CASE("affine rejects mismatched shapes with a named message") {
  Matrix W(2, 3);
  CHECK_THROWS_WITH_AS(affine(W, {1.0, 2.0}, {0.0, 0.0}),
                       doctest::Contains("2x3"), std::invalid_argument);
  CHECK_THROWS_AS(affine(W, {1.0, 2.0, 3.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("affine is linear in x") {
  Rng rng(11);
  Matrix W = init_uniform(4, 5, 1.0, rng);
  Vector x = init_uniform_vec(5, 1.0, rng);
  Vector y = init_uniform_vec(5, 1.0, rng);
  const double a = 1.7, b = -0.3;
  Vector z(5);
  for (int i = 0; i < 5; ++i) z[i] = a * x[i] + b * y[i];
  Vector zero4(4, 0.0);
  Vector lhs = affine(W, z, zero4);
  Vector rx = affine(W, x, zero4), ry = affine(W, y, zero4);
  for (int i = 0; i < 4; ++i) {
    const double rhs = a * rx[i] + b * ry[i];
    CHECK(std::abs(lhs[i] - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("sigmoid values and saturation") {
  CHECK(sigmoid({0.0})[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sigmoid({40.0})[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigmoid({-40.0})[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("sigmoid(v) + sigmoid(-v) == 1") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = rng.uniform(-30.0, 30.0);
    CHECK(sigmoid({v})[0] + sigmoid({-v})[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("tanh_elem values and oddness") {
  CHECK(tanh_elem({0.0})[0] == 0.0);
  CHECK(tanh_elem({40.0})[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tanh_elem({0.5})[0] == doctest::Approx(0.4621171572600098).epsilon(1e-14));
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = rng.uniform(-10.0, 10.0);
    CHECK(tanh_elem({-v})[0] == -tanh_elem({v})[0]);  // exact
  }
}

TEST_CASE("init_uniform: deterministic, bounded, unbiased") {
  Rng a(7), b(7);
  Matrix ma = init_uniform(2, 2, 0.05, a);
  Matrix mb = init_uniform(2, 2, 0.05, b);
  CHECK(ma.d == mb.d);

  Rng c(123);
  Matrix big = init_uniform(1000, 1000, 0.05, c);
  double mean = 0.0;
  for (double v : big.d) {
    CHECK(std::abs(v) <= 0.05);
    mean += v;
  }
  mean /= (double)big.size();
  CHECK(std::abs(mean) < 0.002);
}

TEST_CASE("gaussian stream has roughly unit variance") {
  Rng rng(99);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s += g;
    s2 += g * g;
  }
  const double mean = s / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(s2 / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

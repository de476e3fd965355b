#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wchaos/hermite.hpp"
#include "wchaos/rng.hpp"

using namespace wchaos;

TEST_CASE("point values") {
  CHECK(hermite_eval(0, 3.7) == 1.0);
  CHECK(hermite_eval(2, 1.0) == 0.0);
  CHECK(hermite_eval(3, 2.0) == 2.0);
}

TEST_CASE("recurrence matches explicit low-order formulas") {
  // 1, x, x^2-1, x^3-3x, x^4-6x^2+3 at 100 random points.
  NormalGen g(404, 0, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = 3.0 * (2.0 * g.uniform01() - 1.0);
    const double x2 = x * x;
    const double expect[5] = {1.0, x, x2 - 1.0, x * (x2 - 3.0),
                              x2 * x2 - 6.0 * x2 + 3.0};
    for (int q = 0; q <= 4; ++q) {
      CHECK(std::abs(hermite_eval(q, x) - expect[q]) < 1e-10);
    }
  }
}

TEST_CASE("hermite_eval_all agrees with hermite_eval") {
  std::vector<double> h(13);
  hermite_eval_all(12, 1.37, h.data());
  for (int q = 0; q <= 12; ++q) CHECK(h[q] == hermite_eval(q, 1.37));
}

TEST_CASE("gauss-hermite rule basics") {
  const auto rule = gauss_hermite(24);
  double wsum = 0.0, m2 = 0.0, m8 = 0.0;
  for (int i = 0; i < 24; ++i) {
    wsum += rule.weights[i];
    m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
    m8 += rule.weights[i] * std::pow(rule.nodes[i], 8);
  }
  CHECK(std::abs(wsum - 1.0) < 1e-12);
  CHECK(std::abs(m2 - 1.0) < 1e-12);
  // E[Z^8] = 105 for the standard normal.
  CHECK(std::abs(m8 - 105.0) < 1e-9 * 105.0);
}

TEST_CASE("orthogonality table up to order 10") {
  const auto rule = gauss_hermite(64);
  const int n = static_cast<int>(rule.nodes.size());
  std::vector<std::vector<double>> h(n, std::vector<double>(11));
  for (int i = 0; i < n; ++i) hermite_eval_all(10, rule.nodes[i], h[i].data());
  for (int p = 0; p <= 10; ++p) {
    for (int q = 0; q <= 10; ++q) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rule.weights[i] * h[i][p] * h[i][q];
      const double expect = (p == q) ? factorial(q) : 0.0;
      CHECK(std::abs(s - expect) < 1e-8);
    }
  }
}

TEST_CASE("coefficients of a pure hermite polynomial") {
  auto coeffs = hermite_coeffs([](double x) { return x * x - 1.0; }, 4);
  REQUIRE(coeffs.cmax == 4);
  CHECK(std::abs(coeffs.c[2] - 1.0) < 1e-12);
  CHECK(coeffs.c[0] == 0.0);
  CHECK(coeffs.c[1] == 0.0);
  CHECK(coeffs.c[3] == 0.0);
  CHECK(coeffs.c[4] == 0.0);
}

TEST_CASE("coefficients of x^2 and x^4") {
  auto c2 = hermite_coeffs([](double x) { return x * x; }, 4);
  CHECK(std::abs(c2.c[0] - 1.0) < 1e-12);
  CHECK(std::abs(c2.c[2] - 1.0) < 1e-12);
  CHECK(c2.c[4] == 0.0);

  // Oracle from gaussian moments E[Z^4]=3, E[Z^6]=15, E[Z^8]=105:
  //   c0 = E[Z^4]                        = 3
  //   c2 = E[Z^4 (Z^2-1)] / 2!           = (15 - 3) / 2        = 6
  //   c4 = E[Z^4 (Z^4-6Z^2+3)] / 4!      = (105 - 90 + 9) / 24 = 1
  auto c4 = hermite_coeffs([](double x) { return x * x * x * x; }, 6);
  CHECK(std::abs(c4.c[0] - 3.0) < 1e-11);
  CHECK(std::abs(c4.c[2] - 6.0) < 1e-11);
  CHECK(std::abs(c4.c[4] - 1.0) < 1e-11);
  CHECK(c4.c[1] == 0.0);
  CHECK(c4.c[3] == 0.0);
  CHECK(c4.c[6] == 0.0);
}

TEST_CASE("even functions have vanishing odd coefficients") {
  auto c = hermite_coeffs([](double x) { return std::abs(x); }, 9);
  for (int q = 1; q <= 9; q += 2) CHECK(c.c[q] == 0.0);
  // |x| has a kink, so the quadrature itself converges slowly; E|Z| is only
  // good to a few 1e-3 at 64 nodes. The symmetry zeros above are exact.
  CHECK(std::abs(c.c[0] - std::sqrt(2.0 / std::acos(-1.0))) < 1e-2);
}

TEST_CASE("series reconstruction") {
  // A finite Hermite polynomial reconstructs to machine precision everywhere.
  auto fh = [](double x) {
    return 0.5 - 1.25 * hermite_eval(1, x) + 2.0 * hermite_eval(3, x) +
           0.75 * hermite_eval(6, x);
  };
  auto ch = hermite_coeffs(fh, 8);
  for (double x = -6.0; x <= 6.0; x += 0.5) {
    CHECK(std::abs(ch.eval(x) - fh(x)) < 1e-9);
  }

  // For analytic f the tail coefficients fall below the 1e-12 snap threshold;
  // those zeroed terms scale with H_q growth, so interior reconstruction is
  // good to ~1e-6, not machine precision.
  auto c = hermite_coeffs([](double x) { return std::cos(x); }, 20);
  for (double x = -3.0; x <= 3.0; x += 0.375) {
    CHECK(std::abs(c.eval(x) - std::cos(x)) < 2e-6);
  }
  // c0 is the gaussian mean: E[cos Z] = exp(-1/2).
  CHECK(std::abs(c.c[0] - std::exp(-0.5)) < 1e-12);
}

TEST_CASE("f overflowing at the outer nodes is rejected") {
  CHECK_THROWS(
      hermite_coeffs([](double x) { return std::exp(x * x * x * x); }, 4));
}

TEST_CASE("node count default and validation") {
  CHECK(default_gh_nodes(4) == 64);
  CHECK(default_gh_nodes(40) == 96);
  CHECK_THROWS(hermite_coeffs([](double x) { return x; }, 4, 3));
}

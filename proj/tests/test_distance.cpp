#include "wchaos/distance.hpp"

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "wchaos/quadrature.hpp"
#include "wchaos/rng.hpp"

namespace {

using wchaos::EmpiricalSample;
using wchaos::NormalGen;

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed,
                                 double shift = 0.0, double scale = 1.0) {
  NormalGen gen(seed, 77, 0);
  std::vector<double> x(n);
  for (double& v : x) v = shift + scale * gen();
  return x;
}

double phi_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

// Independent value for int |F_n - Phi|: numerical quadrature of the constant
// empirical level against the CDF on every segment, plus wide finite tails.
double dw_quadrature_oracle(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  double acc = wchaos::adaptive_simpson([](double t) { return phi_cdf(t); },
                                        x.front() - 12.0, x.front(), 1e-11);
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i - 1] == x[i]) continue;
    const double c = static_cast<double>(i) / static_cast<double>(n);
    acc += wchaos::adaptive_simpson(
        [c](double t) { return std::abs(c - phi_cdf(t)); }, x[i - 1], x[i],
        1e-11);
  }
  acc += wchaos::adaptive_simpson(
      [](double t) { return 1.0 - phi_cdf(t); }, x.back(), x.back() + 12.0,
      1e-11);
  return acc;
}

}  // namespace

TEST_CASE("normal cdf, survival, and quantile") {
  CHECK(wchaos::normal_cdf(0.0) == 0.5);
  CHECK(wchaos::normal_cdf(1.0) == Catch::Approx(0.841344746068543).margin(1e-15));
  CHECK(wchaos::normal_cdf(-1.96) ==
        Catch::Approx(0.024997895148220435).margin(1e-15));
  CHECK(wchaos::normal_sf(6.0) ==
        Catch::Approx(9.865876450376946e-10).epsilon(1e-12));
  CHECK(wchaos::normal_sf(2.0) ==
        Catch::Approx(1.0 - wchaos::normal_cdf(2.0)).margin(1e-16));
  CHECK(wchaos::normal_pdf(0.0) ==
        Catch::Approx(1.0 / std::sqrt(2.0 * M_PI)).margin(1e-16));

  CHECK(wchaos::normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-16));
  for (const double p : {1e-12, 1e-6, 0.01, 0.3, 0.7, 0.975, 1.0 - 1e-9}) {
    const double x = wchaos::normal_quantile(p);
    CHECK(wchaos::normal_cdf(x) == Catch::Approx(p).epsilon(1e-13));
  }
  // Round trip in the other direction.
  for (const double x : {-5.0, -1.3, 0.2, 2.4, 6.0}) {
    CHECK(wchaos::normal_quantile(wchaos::normal_cdf(x)) ==
          Catch::Approx(x).margin(1e-11));
  }
  CHECK_THROWS_AS(wchaos::normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(wchaos::normal_quantile(1.0), std::invalid_argument);
  CHECK_THROWS_AS(wchaos::normal_quantile(-0.5), std::invalid_argument);
}

TEST_CASE("point mass matches the analytic mean deviation") {
  // d_W(delta_c, N(0,1)) = E|Z - c| = 2 phi(c) + c (2 Phi(c) - 1).
  for (const double c : {0.0, 1.3, -2.2}) {
    const double want = 2.0 * wchaos::normal_pdf(c) +
                        c * (2.0 * phi_cdf(c) - 1.0);
    for (const std::size_t n : {std::size_t{2}, std::size_t{17}}) {
      const EmpiricalSample s(std::vector<double>(n, c));
      CHECK(wchaos::empirical_dw_1d(s) == Catch::Approx(want).margin(1e-14));
    }
  }
  // c = 0 specializes to E|Z| = sqrt(2/pi).
  const EmpiricalSample zeros(std::vector<double>(5, 0.0));
  CHECK(wchaos::empirical_dw_1d(zeros) ==
        Catch::Approx(std::sqrt(2.0 / M_PI)).margin(1e-14));
}

TEST_CASE("closed-form pieces match quadrature") {
  for (const double shift : {0.0, 0.8, -1.7}) {
    auto x = normal_draws(200, 42, shift);
    const double got = wchaos::empirical_dw_1d(EmpiricalSample(x));
    CHECK(got == Catch::Approx(dw_quadrature_oracle(x)).margin(1e-7));
  }
  // Scaled sample exercises wide segments on both tails.
  auto wide = normal_draws(150, 43, 0.0, 2.0);
  CHECK(wchaos::empirical_dw_1d(EmpiricalSample(wide)) ==
        Catch::Approx(dw_quadrature_oracle(wide)).margin(1e-7));
  // Ties are plateaus of the empirical CDF, not extra mass.
  std::vector<double> tied = {-0.5, -0.5, -0.5, 0.3, 0.3, 1.1};
  CHECK(wchaos::empirical_dw_1d(EmpiricalSample(tied)) ==
        Catch::Approx(dw_quadrature_oracle(tied)).margin(1e-7));
}

TEST_CASE("consistency on standard normal draws") {
  const auto x = normal_draws(100000, 1234);
  CHECK(wchaos::empirical_dw_1d(EmpiricalSample(x)) < 0.01);
}

TEST_CASE("shifted draws converge to the shift size") {
  const double c = 0.8;
  const auto x = normal_draws(200000, 55, c);
  CHECK(wchaos::empirical_dw_1d(EmpiricalSample(x)) ==
        Catch::Approx(c).margin(0.01));
}

TEST_CASE("reflection symmetry") {
  auto x = normal_draws(500, 66, 0.3);
  auto neg = x;
  for (double& v : neg) v = -v;
  CHECK(wchaos::empirical_dw_1d(EmpiricalSample(x)) ==
        Catch::Approx(wchaos::empirical_dw_1d(EmpiricalSample(neg)))
            .margin(1e-12));
}

TEST_CASE("bootstrap standard error") {
  const EmpiricalSample s(normal_draws(5000, 77));
  const auto est = wchaos::empirical_dw_1d_boot(s, 99);
  CHECK(est.value == wchaos::empirical_dw_1d(s));
  CHECK(est.n == 5000);
  CHECK(est.replicates == 32);
  CHECK(est.stderr_ > 0.0);
  CHECK(est.stderr_ < est.value);
  const auto again = wchaos::empirical_dw_1d_boot(s, 99);
  CHECK(est.stderr_ == again.stderr_);
  const auto other = wchaos::empirical_dw_1d_boot(s, 100);
  CHECK(est.stderr_ != other.stderr_);
  CHECK_THROWS_AS(wchaos::empirical_dw_1d_boot(s, 99, 1),
                  std::invalid_argument);
}

TEST_CASE("histogram TV diagnostic") {
  // Balanced two-cell sample reproduces the Gaussian halves exactly.
  {
    std::vector<double> v = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
    CHECK(wchaos::histogram_tv(EmpiricalSample(v), 2) == 0.0);
  }
  // Point mass at 0 with 10 bins: 0 lands in the cell (-1.25, 0].
  {
    const EmpiricalSample s(std::vector<double>(4, 0.0));
    const double got = wchaos::histogram_tv(s, 10);
    double want = 0.0;
    double prev = 0.0;
    for (int j = 0; j <= 8; ++j) {
      const double e = -5.0 + 10.0 * j / 8.0;
      const double mass = phi_cdf(e) - prev;
      want += std::abs(((j == 4) ? 1.0 : 0.0) - mass);
      prev = phi_cdf(e);
    }
    want += std::abs(0.0 - (1.0 - prev));
    CHECK(got == Catch::Approx(0.5 * want).margin(1e-12));
  }
  // Never exceeds 1, even for data far outside the grid.
  {
    const EmpiricalSample far(std::vector<double>(8, 100.0));
    const double tv = wchaos::histogram_tv(far, 12);
    CHECK(tv <= 1.0);
    CHECK(tv > 0.99);
  }
  // Coarsening merges cells pairwise, which can only lower the value.
  {
    const EmpiricalSample s(normal_draws(5000, 88, 0.4));
    double prev_tv = 1.0;
    for (const int bins : {34, 18, 10, 6, 4, 3}) {
      const double tv = wchaos::histogram_tv(s, bins);
      CHECK(tv <= 1.0);
      CHECK(tv <= prev_tv + 1e-15);
      prev_tv = tv;
    }
  }
  CHECK_THROWS_AS(
      wchaos::histogram_tv(EmpiricalSample({0.0, 1.0}), 1),
      std::invalid_argument);
}

TEST_CASE("sample validation") {
  CHECK_THROWS_AS(EmpiricalSample(std::vector<double>{1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalSample({0.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(
      EmpiricalSample({0.0, std::numeric_limits<double>::infinity()}),
      std::invalid_argument);
  const EmpiricalSample s(std::vector<double>{3.0, -1.0, 2.0});
  CHECK(s.values() == std::vector<double>{-1.0, 2.0, 3.0});
  CHECK(s.n() == 3);
}

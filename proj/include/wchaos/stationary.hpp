#pragma once

// Stationary-increment Gaussian models: the fractional Brownian increment
// covariance, an integrability certificate for |rho|, and the quadrature
// helpers shared by the subordinated-field experiment.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wchaos/quadrature.hpp"

namespace wchaos {

// rho(x) = Cov(B_{x+1} - B_x, B_1 - B_0) for fractional Brownian motion:
// 0.5 (|x+1|^{2H} + |x-1|^{2H} - 2|x|^{2H}). Even in x, rho(0) = 1.
inline double fbm_increment_cov(double hurst, double x) {
  if (!(hurst > 0.0) || !(hurst < 1.0)) {
    throw std::invalid_argument("fbm_increment_cov: H outside (0,1)");
  }
  const double a = 2.0 * hurst;
  const double ax = std::abs(x);
  return 0.5 * (std::pow(ax + 1.0, a) + std::pow(std::abs(ax - 1.0), a) -
                2.0 * std::pow(ax, a));
}

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // quadrature tolerance plus analytic tail budget
};

// fBm increment model with H <= 1/2, the summable-covariance regime. x_max
// truncates all covariance quadratures; beyond it the decay envelope
// |rho(x)| <= ratio * x^{2H-2} (ratio measured at x_max, valid because
// |rho(x)| x^{2-2H} decreases for x > 1) supplies analytic tail bounds.
struct StationaryIncrementModel {
  double hurst = 0.25;
  double x_max = 16.0;
  double tail_ratio = 0.0;  // |rho(x_max)| * x_max^{2-2H}
  double rho_l1 = 0.0;      // certified estimate of int |rho|
  double rho_l1_err = 0.0;

  double rho(double x) const { return fbm_increment_cov(hurst, x); }
};

namespace detail {

// rho starts at 1, crosses zero once in (0, 1], and stays nonpositive after.
inline double rho_zero_crossing(double hurst) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (fbm_increment_cov(hurst, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Piecewise-smooth breakpoints of |rho|^p on [0, x]: the zero crossing and
// the kink of the covariance at 1.
inline std::vector<double> rho_knots(double hurst, double x) {
  std::vector<double> k{0.0, rho_zero_crossing(hurst), 1.0, 2.0, x};
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  while (!k.empty() && k.back() > x) k.pop_back();
  if (k.empty() || k.back() < x) k.push_back(x);
  return k;
}

// One-sided tail bound for int_{x}^{inf} |rho|^p under the decay envelope.
// H = 1/2 has compact support, hence a vanishing ratio and no tail.
inline double rho_tail_bound(const StationaryIncrementModel& m, int p) {
  if (m.tail_ratio == 0.0) return 0.0;
  const double decay = (2.0 - 2.0 * m.hurst) * p - 1.0;
  if (decay <= 0.0) {
    throw std::logic_error("rho_tail_bound: tail does not converge");
  }
  return std::pow(m.tail_ratio, p) * std::pow(m.x_max, -decay) / decay;
}

}  // namespace detail

// int_R |rho|^p dx for p >= 1 by adaptive quadrature on |x| <= x_max plus
// the analytic tail budget on the error side.
inline QuadResult rho_abs_power_integral(const StationaryIncrementModel& m,
                                         int p, double tol = 1e-10) {
  if (p < 1) throw std::invalid_argument("rho_abs_power_integral: p < 1");
  const auto knots = detail::rho_knots(m.hurst, m.x_max);
  const double half = adaptive_simpson_segments(
      [&](double x) { return std::pow(std::abs(m.rho(x)), p); }, knots, tol);
  QuadResult out;
  out.value = 2.0 * half;
  out.error = 2.0 * (tol * knots.size() + detail::rho_tail_bound(m, p));
  return out;
}

// Builds the model: picks x_max so the tail of int rho^2 is below tail_tol,
// then certifies int |rho|.
inline StationaryIncrementModel fbm_model(double hurst,
                                          double tail_tol = 1e-6) {
  if (!(hurst > 0.0) || !(hurst <= 0.5)) {
    throw std::invalid_argument("fbm_model: need H in (0, 1/2]");
  }
  StationaryIncrementModel m;
  m.hurst = hurst;
  m.x_max = 16.0;
  for (int i = 0; i < 24; ++i) {
    m.tail_ratio = std::abs(m.rho(m.x_max)) *
                   std::pow(m.x_max, 2.0 - 2.0 * hurst);
    if (2.0 * detail::rho_tail_bound(m, 2) < tail_tol) break;
    m.x_max *= 2.0;
  }
  const QuadResult l1 = rho_abs_power_integral(m, 1);
  m.rho_l1 = l1.value;
  m.rho_l1_err = l1.error;
  return m;
}

namespace detail {

// phi * (phi conv phi conv phi) for phi = |rho|, summed on the grid
// x = i*d, |x| <= radius. Three integrals, so the Riemann factor is d^3.
inline double triple_conv_grid(const StationaryIncrementModel& m, double d,
                               double radius) {
  const std::int64_t n = static_cast<std::int64_t>(std::ceil(radius / d));
  std::vector<double> phi(static_cast<std::size_t>(2 * n + 1));
  for (std::int64_t i = -n; i <= n; ++i) {
    phi[static_cast<std::size_t>(i + n)] = std::abs(m.rho(i * d));
  }
  std::vector<double> conv2(static_cast<std::size_t>(4 * n + 1), 0.0);
  for (std::int64_t i = -n; i <= n; ++i) {
    const double pi = phi[static_cast<std::size_t>(i + n)];
    for (std::int64_t j = -n; j <= n; ++j) {
      conv2[static_cast<std::size_t>(i + j + 2 * n)] +=
          pi * phi[static_cast<std::size_t>(j + n)];
    }
  }
  double total = 0.0;
  for (std::int64_t s = -n; s <= n; ++s) {
    double conv3 = 0.0;
    const std::int64_t klo = std::max(-2 * n, s - n);
    const std::int64_t khi = std::min(2 * n, s + n);
    for (std::int64_t k = klo; k <= khi; ++k) {
      conv3 += conv2[static_cast<std::size_t>(k + 2 * n)] *
               phi[static_cast<std::size_t>(s - k + n)];
    }
    total += phi[static_cast<std::size_t>(s + n)] * conv3;
  }
  return total * d * d * d;
}

}  // namespace detail

// I3 = int |rho(x)| |rho(y)| |rho(t)| |rho(x-y-t)| dx dy dt, computed as
// int phi * (phi conv phi conv phi) on a uniform grid. The truncation error
// decays like radius^{4H-3}, so a modest radius suffices; halving the step
// and the radius gives the self-consistency error estimate.
inline QuadResult rho_triple_convolution(const StationaryIncrementModel& m,
                                         double step = 1.0 / 32.0,
                                         double radius = 32.0) {
  if (!(step > 0.0) || !(radius > 2.0)) {
    throw std::invalid_argument("rho_triple_convolution: bad step or radius");
  }
  const double full = detail::triple_conv_grid(m, 0.5 * step, radius);
  const double coarse_step = detail::triple_conv_grid(m, step, radius);
  const double half_radius =
      detail::triple_conv_grid(m, 0.5 * step, 0.5 * radius);
  QuadResult out;
  out.value = full;
  out.error = std::abs(full - coarse_step) + std::abs(full - half_radius);
  return out;
}

}  // namespace wchaos

#pragma once

// Scalar quadrature: globally adaptive Simpson with Richardson acceptance.
// Integrands here are smooth away from isolated cusps; callers split the
// domain at known cusp locations and per-segment adaptivity does the rest.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace wchaos {

namespace detail {

inline double simpson(double a, double fa, double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_step(F& f, double a, double fa, double b, double fb, double m,
                     double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, flm, m, fm);
  const double right = simpson(m, fm, frm, b, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10,
                        int max_depth = 48) {
  if (!(a < b)) {
    if (a == b) return 0.0;
    throw std::invalid_argument("adaptive_simpson: a > b");
  }
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
    throw std::domain_error("adaptive_simpson: non-finite integrand");
  }
  const double whole = detail::simpson(a, fa, fm, b, fb);
  return detail::adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// Integrate over [a,b] split at interior breakpoints (cusps of the integrand).
template <typename F>
double adaptive_simpson_segments(F&& f, const std::vector<double>& knots,
                                 double tol = 1e-10) {
  if (knots.size() < 2) throw std::invalid_argument("need >= 2 knots");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i] > knots[i + 1]) {
      throw std::invalid_argument("knots must be nondecreasing");
    }
    if (knots[i] < knots[i + 1]) {
      total += adaptive_simpson(f, knots[i], knots[i + 1], tol);
    }
  }
  return total;
}

}  // namespace wchaos

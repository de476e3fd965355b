#pragma once

// Hermite polynomials in the probabilists' convention with leading
// coefficient 1: H_0 = 1, H_1 = x, H_{q+1} = x H_q - q H_{q-1}. Under the
// standard normal law, E[H_p(Z) H_q(Z)] = delta_{pq} q!.
// Gauss-Hermite quadrature is set up for that weight directly, so node sums
// approximate plain expectations E[f(Z)].

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace wchaos {

inline double factorial(int n) {
  double p = 1.0;
  for (int k = 2; k <= n; ++k) p *= k;
  return p;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double p = 1.0;
  for (int j = 1; j <= k; ++j) p = p * (n - k + j) / j;
  return p;
}

inline double hermite_eval(int q, double x) {
  if (q < 0) throw std::invalid_argument("hermite_eval: negative order");
  if (q == 0) return 1.0;
  double hm = 1.0, h = x;
  for (int k = 1; k < q; ++k) {
    const double hn = x * h - k * hm;
    hm = h;
    h = hn;
  }
  return h;
}

// Fills out[0..qmax] with H_0(x)..H_qmax(x).
inline void hermite_eval_all(int qmax, double x, double* out) {
  out[0] = 1.0;
  if (qmax == 0) return;
  out[1] = x;
  for (int k = 1; k < qmax; ++k) out[k + 1] = x * out[k] - k * out[k - 1];
}

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1; E[f(Z)] ~ sum w_i f(x_i)
};

namespace detail {

// Orthonormal Hermite value and derivative at x: phi_k = H_k / sqrt(k!),
// phi_{k+1} = (x phi_k - sqrt(k) phi_{k-1}) / sqrt(k+1). Returns phi_n and
// phi_n'; christoffel accumulates sum_{k<n} phi_k(x)^2 (its reciprocal is the
// Gauss weight).
inline void orthonormal_hermite(int n, double x, double& val, double& deriv,
                                double& christoffel) {
  double pm = 0.0, p = 1.0;  // phi_{-1}, phi_0
  christoffel = 1.0;
  for (int k = 0; k < n; ++k) {
    const double pn =
        (x * p - std::sqrt(static_cast<double>(k)) * pm) / std::sqrt(k + 1.0);
    pm = p;
    p = pn;
    if (k + 1 < n) christoffel += p * p;
  }
  val = p;
  // phi_n' = sqrt(n) phi_{n-1}.
  deriv = std::sqrt(static_cast<double>(n)) * pm;
}

}  // namespace detail

// Golub-Welsch eigenvalues of the Jacobi matrix (zero diagonal, off-diagonals
// sqrt(k)) as initial guesses, then Newton-polished on the orthonormal
// recurrence; weights from the Christoffel function w_i = 1 / sum phi_k(x_i)^2.
// The polish step matters: raw eigensolver output leaves ~1e-7 orthogonality
// residuals at order 10, the polished rule is at machine precision.
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("gauss_hermite: eigensolver failed");
  }
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    double val = 0.0, deriv = 0.0, chris = 0.0;
    for (int it = 0; it < 4; ++it) {
      detail::orthonormal_hermite(n, x, val, deriv, chris);
      const double step = val / deriv;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    detail::orthonormal_hermite(n, x, val, deriv, chris);
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / chris;
  }
  return rule;
}

struct HermiteCoeffs {
  int cmax = 0;
  std::vector<double> c;  // c[q] multiplies H_q

  double eval(double x) const {
    std::vector<double> h(cmax + 1);
    hermite_eval_all(cmax, x, h.data());
    double s = 0.0;
    for (int q = 0; q <= cmax; ++q) s += c[q] * h[q];
    return s;
  }
};

inline constexpr double kCoeffSnapTol = 1e-12;

inline int default_gh_nodes(int qmax) {
  const int m = 2 * qmax + 16;
  return m < 64 ? 64 : m;
}

// c_q = E[f(Z) H_q(Z)] / q! by Gauss-Hermite quadrature. Coefficients with
// |c_q| < 1e-12 are snapped to exact zero so downstream series (variance
// limits) truncate cleanly.
template <typename F>
HermiteCoeffs hermite_coeffs(F&& f, int qmax, int nodes = 0) {
  if (qmax < 0) throw std::invalid_argument("hermite_coeffs: negative qmax");
  if (nodes == 0) nodes = default_gh_nodes(qmax);
  if (nodes < qmax + 1) {
    throw std::invalid_argument("hermite_coeffs: nodes < qmax+1");
  }
  const GaussHermiteRule rule = gauss_hermite(nodes);
  HermiteCoeffs out;
  out.cmax = qmax;
  out.c.assign(qmax + 1, 0.0);
  std::vector<double> h(qmax + 1);
  for (int i = 0; i < nodes; ++i) {
    const double fx = f(rule.nodes[i]);
    if (!std::isfinite(fx)) {
      throw std::domain_error("hermite_coeffs: non-finite f at node");
    }
    hermite_eval_all(qmax, rule.nodes[i], h.data());
    for (int q = 0; q <= qmax; ++q) out.c[q] += rule.weights[i] * fx * h[q];
  }
  for (int q = 0; q <= qmax; ++q) {
    out.c[q] /= factorial(q);
    if (std::abs(out.c[q]) < kCoeffSnapTol) out.c[q] = 0.0;
  }
  return out;
}

}  // namespace wchaos

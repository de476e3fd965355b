#pragma once

// Linear functionals of a subordinated stationary-increment field:
//   F_T = (1/sqrt(T)) int_{aT}^{bT} (f(B_{u+1} - B_u) - E f(Z)) du
// discretized on a uniform grid. Simulation goes through one Toeplitz
// Cholesky factorization per grid; the variance limit and the Wasserstein
// bound ingredients come from the covariance quadratures in stationary.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wchaos/distance.hpp"
#include "wchaos/hermite.hpp"
#include "wchaos/quadrature.hpp"
#include "wchaos/rng.hpp"
#include "wchaos/stationary.hpp"

namespace wchaos {

inline constexpr std::uint64_t kTagIncrements = 0x494e4352ULL;
inline constexpr std::uint64_t kTagReplica = 0x5245504cULL;
inline constexpr std::uint64_t kTagRateBoot = 0x52424f54ULL;
inline constexpr int kMaxGridPoints = 16384;

// The subordinating function f = sum_q c[q] H_q rides on the HermiteCoeffs
// from hermite.hpp; c[0] = E f(Z). Everything below requires the size
// invariant c.size() == cmax + 1.
inline void hermite_check(const HermiteCoeffs& f) {
  if (f.cmax < 0 ||
      f.c.size() != static_cast<std::size_t>(f.cmax) + 1) {
    throw std::invalid_argument(
        "hermite_check: coefficient vector does not match cmax");
  }
}

inline int hermite_degree(const HermiteCoeffs& f) {
  for (int q = f.cmax; q >= 1; --q) {
    if (f.c[static_cast<std::size_t>(q)] != 0.0) return q;
  }
  return 0;
}

// Series value through the three-term recurrence, no scratch allocation;
// this sits in the per-point hot loop of the Riemann sums.
inline double hermite_series_eval(const HermiteCoeffs& f, double x) {
  double acc = f.c[0];
  if (f.cmax >= 1) {
    double hm = 1.0, h = x;
    acc += f.c[1] * h;
    for (int q = 2; q <= f.cmax; ++q) {
      const double hn = x * h - static_cast<double>(q - 1) * hm;
      hm = h;
      h = hn;
      acc += f.c[static_cast<std::size_t>(q)] * h;
    }
  }
  return acc;
}

// H_q' = q H_{q-1}.
inline HermiteCoeffs hermite_derivative(const HermiteCoeffs& f) {
  hermite_check(f);
  HermiteCoeffs d;
  if (f.cmax == 0) {
    d.cmax = 0;
    d.c = {0.0};
    return d;
  }
  d.cmax = f.cmax - 1;
  d.c.resize(static_cast<std::size_t>(f.cmax));
  for (int q = 1; q <= f.cmax; ++q) {
    d.c[static_cast<std::size_t>(q - 1)] =
        static_cast<double>(q) * f.c[static_cast<std::size_t>(q)];
  }
  return d;
}

inline bool hermite_symmetric(const HermiteCoeffs& f, double tol = 1e-10) {
  for (int q = 1; q <= f.cmax; q += 2) {
    if (std::abs(f.c[static_cast<std::size_t>(q)]) > tol) return false;
  }
  return true;
}

inline bool hermite_constant(const HermiteCoeffs& f, double tol = 1e-12) {
  for (int q = 1; q <= f.cmax; ++q) {
    if (std::abs(f.c[static_cast<std::size_t>(q)]) > tol) return false;
  }
  return true;
}

// E[f(Z)^4] by Gauss-Hermite quadrature: f^4 has degree 4 deg(f), so
// 2 deg(f) + 1 nodes integrate it exactly.
inline double hermite_fourth_moment(const HermiteCoeffs& f) {
  hermite_check(f);
  const int deg = hermite_degree(f);
  const GaussHermiteRule rule = gauss_hermite(2 * deg + 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = hermite_series_eval(f, rule.nodes[i]);
    const double v2 = v * v;
    acc += rule.weights[i] * v2 * v2;
  }
  return acc;
}

// Exact Gaussian sampling of increments Y_i = B_{u_i+1} - B_{u_i} on an
// equally spaced grid, through one in-place Cholesky factorization of the
// Toeplitz covariance. The factorization is shared read-only across
// replicas; sample() is safe to call concurrently.
class IncrementSampler {
 public:
  IncrementSampler(const StationaryIncrementModel& model,
                   const std::vector<double>& grid) {
    const std::size_t m = grid.size();
    if (m == 0) throw std::invalid_argument("IncrementSampler: empty grid");
    if (m > static_cast<std::size_t>(kMaxGridPoints)) {
      throw std::invalid_argument(
          "IncrementSampler: grid larger than 16384 points");
    }
    const double h = m >= 2 ? grid[1] - grid[0] : 1.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (std::abs(grid[i + 1] - grid[i] - h) >
          1e-9 * std::max(1.0, std::abs(h))) {
        throw std::invalid_argument("IncrementSampler: grid not equally spaced");
      }
    }
    std::vector<double> r(m);
    for (std::size_t k = 0; k < m; ++k) {
      r[k] = model.rho(static_cast<double>(k) * h);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(m);
    for (const double jitter : {0.0, 1e-12, 1e-11, 1e-10}) {
      mat_.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
          const double v = r[static_cast<std::size_t>(i - j)];
          mat_(i, j) = v;
          mat_(j, i) = v;
        }
        mat_(i, i) += jitter;
      }
      llt_.emplace(mat_);
      if (llt_->info() == Eigen::Success) {
        jitter_ = jitter;
        return;
      }
      llt_.reset();
    }
    throw std::runtime_error(
        "IncrementSampler: covariance not positive definite within the "
        "1e-10 jitter budget");
  }

  IncrementSampler(const IncrementSampler&) = delete;
  IncrementSampler& operator=(const IncrementSampler&) = delete;

  std::size_t size() const { return static_cast<std::size_t>(mat_.rows()); }
  double jitter() const { return jitter_; }

  std::vector<double> sample(std::uint64_t seed) const {
    const Eigen::Index n = mat_.rows();
    NormalGen gen(seed, kTagIncrements, 0);
    Eigen::VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = gen();
    const Eigen::VectorXd y = llt_->matrixL() * xi;
    return std::vector<double>(y.data(), y.data() + n);
  }

 private:
  Eigen::MatrixXd mat_;  // holds the decomposition after construction
  std::optional<Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>>> llt_;
  double jitter_ = 0.0;
};

inline std::vector<double> simulate_increments(
    const StationaryIncrementModel& model, const std::vector<double>& grid,
    std::uint64_t seed) {
  return IncrementSampler(model, grid).sample(seed);
}

// Midpoint Riemann sum of (1/sqrt(T)) int_{aT}^{bT} (f(Y_u) - c_0) du. The
// path must hold Y at the midpoints a*t + (i + 1/2)*delta.
inline double compute_FT(const std::vector<double>& path,
                         const HermiteCoeffs& f, double a, double b, double t,
                         double delta) {
  if (!(a < b)) throw std::invalid_argument("compute_FT: a >= b");
  if (!(t > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("compute_FT: t and delta must be positive");
  }
  const double steps = (b - a) * t / delta;
  const auto m = static_cast<std::int64_t>(std::llround(steps));
  if (m < 1 || std::abs(steps - static_cast<double>(m)) > 1e-9 * steps) {
    throw std::invalid_argument(
        "compute_FT: (b-a)*t is not a multiple of delta");
  }
  if (path.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("compute_FT: path/interval mismatch");
  }
  hermite_check(f);
  const double c0 = f.c[0];
  double acc = 0.0;
  for (const double y : path) acc += hermite_series_eval(f, y) - c0;
  return acc * delta / std::sqrt(t);
}

// Limit variance (b-a) sum_q c_{2q}^2 (2q)! int rho^{2q}. Only symmetric,
// non-constant f qualifies. terms holds the per-q contributions, all
// nonnegative, so partial sums are nondecreasing in qmax.
struct SigmaLimit {
  double value = 0.0;
  double error = 0.0;
  std::vector<double> terms;
};

inline SigmaLimit sigma_limit(const HermiteCoeffs& f,
                              const StationaryIncrementModel& model, double a,
                              double b, int qmax = -1, double tol = 1e-10) {
  if (!(a < b)) throw std::invalid_argument("sigma_limit: a >= b");
  hermite_check(f);
  if (!hermite_symmetric(f)) {
    throw std::invalid_argument(
        "sigma_limit: odd Hermite coefficients present; the variance limit "
        "is defined for symmetric f");
  }
  if (hermite_constant(f)) {
    throw std::invalid_argument(
        "sigma_limit: constant f has zero limit variance");
  }
  const int top = qmax >= 1 ? qmax : hermite_degree(f) / 2;
  SigmaLimit out;
  for (int q = 1; q <= top; ++q) {
    const std::size_t idx = static_cast<std::size_t>(2 * q);
    const double c2q = idx < f.c.size() ? f.c[idx] : 0.0;
    double term = 0.0;
    if (c2q != 0.0) {
      const QuadResult integral = rho_abs_power_integral(model, 2 * q, tol);
      const double w = (b - a) * c2q * c2q * factorial(2 * q);
      term = w * integral.value;
      out.error += w * integral.error;
    }
    out.terms.push_back(term);
    out.value += term;
  }
  return out;
}

// Exact variance of the discretized functional: Cov(f(Y_u), f(Y_v)) =
// sum_k c_k^2 k! rho^k(u - v), summed over the Toeplitz grid.
inline double grid_variance(const HermiteCoeffs& f,
                            const StationaryIncrementModel& model, double a,
                            double b, double t, double delta) {
  if (!(a < b) || !(t > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("grid_variance: bad interval");
  }
  const double steps = (b - a) * t / delta;
  const auto m = static_cast<std::int64_t>(std::llround(steps));
  if (m < 1 || std::abs(steps - static_cast<double>(m)) > 1e-9 * steps) {
    throw std::invalid_argument(
        "grid_variance: (b-a)*t is not a multiple of delta");
  }
  hermite_check(f);
  const int deg = hermite_degree(f);
  auto cov_of = [&](double r) {
    double acc = 0.0;
    double rp = 1.0;
    for (int k = 1; k <= deg; ++k) {
      rp *= r;
      const double ck = f.c[static_cast<std::size_t>(k)];
      if (ck != 0.0) acc += ck * ck * factorial(k) * rp;
    }
    return acc;
  };
  double acc = cov_of(model.rho(0.0));
  for (std::int64_t k = 1; k < m; ++k) {
    const double w =
        1.0 - static_cast<double>(k) / static_cast<double>(m);
    acc += 2.0 * w * cov_of(model.rho(static_cast<double>(k) * delta));
  }
  return delta * (b - a) * acc;
}

// (1/T) int_{[aT,bT]^2} |rho(u-v)| du dv
//   = int (width - |x|/t)_+ |rho(x)| dx, width = b-a:
// the double integral in the gradient-moment bound. Increases to
// width * int |rho| as t grows.
inline QuadResult weighted_rho_l1(const StationaryIncrementModel& model,
                                  double width, double t, double tol = 1e-10) {
  if (!(width > 0.0) || !(t > 0.0)) {
    throw std::invalid_argument("weighted_rho_l1: bad width or t");
  }
  const double cut = std::min(width * t, model.x_max);
  const auto knots = detail::rho_knots(model.hurst, cut);
  const double half = adaptive_simpson_segments(
      [&](double x) { return (width - x / t) * std::abs(model.rho(x)); },
      knots, tol);
  QuadResult out;
  out.value = 2.0 * half;
  out.error = 2.0 * tol * static_cast<double>(knots.size());
  if (width * t > model.x_max) {
    out.error += 2.0 * width * detail::rho_tail_bound(model, 1);
  }
  return out;
}

struct SubordinatedConfig {
  StationaryIncrementModel model;
  HermiteCoeffs f;
  double a = 0.0;
  double b = 1.0;
  std::vector<double> t_grid;
  double delta = 0.125;
  int replicas = 2000;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const {
    hermite_check(f);
    if (!(a < b)) throw std::invalid_argument("config: a >= b");
    if (!(delta > 0.0) || delta > 0.125 + 1e-12) {
      throw std::invalid_argument("config: delta must lie in (0, 1/8]");
    }
    if (replicas < 100) {
      throw std::invalid_argument("config: need at least 100 replicas");
    }
    if (t_grid.empty()) throw std::invalid_argument("config: empty T grid");
    for (const double t : t_grid) {
      if (!(t > 0.0)) throw std::invalid_argument("config: T must be positive");
      const double steps = (b - a) * t / delta;
      const auto m = static_cast<std::int64_t>(std::llround(steps));
      if (m < 1 || std::abs(steps - static_cast<double>(m)) > 1e-9 * steps) {
        throw std::invalid_argument(
            "config: (b-a)*T must be a multiple of delta");
      }
      if (m > kMaxGridPoints) {
        throw std::invalid_argument("config: grid exceeds 16384 points");
      }
    }
    if (workers < 1) throw std::invalid_argument("config: workers < 1");
  }
};

struct RateRow {
  double t = 0.0;
  std::uint64_t grid_points = 0;
  double jitter = 0.0;
  double var_emp = 0.0;
  double var_emp_stderr = 0.0;
  double var_grid = 0.0;  // exact variance of the discretized functional
  double dw = 0.0;
  double dw_stderr = 0.0;
  double bound_w = 0.0;
  double bound_w_stderr = 0.0;
  double grad_term = 0.0;  // E|f'(Z)|^4 * D(T)^2
  double hess_term = 0.0;  // E|f''(Z)|^4 * (b-a) * I3 / T
};

struct RateStudy {
  SigmaLimit sigma2;
  QuadResult i3;
  double fp4 = 0.0;   // E|f'(Z)|^4
  double fpp4 = 0.0;  // E|f''(Z)|^4
  std::vector<RateRow> rows;
  double slope_dw = std::numeric_limits<double>::quiet_NaN();
  double slope_bound = std::numeric_limits<double>::quiet_NaN();
  bool dominated = true;  // dw <= bound + 4 stderr at every T
};

namespace detail {

inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

}  // namespace detail

// Per-T experiment: R replicas of the discretized F_T, empirical variance
// and Wasserstein distance of the standardized sample, and the contraction
// bound assembled from the quadrature ingredients. The bound standardizes
// with the empirical variance; the limit variance is reported alongside.
inline RateStudy rate_study(const SubordinatedConfig& cfg) {
  cfg.validate();
  RateStudy study;
  study.sigma2 = sigma_limit(cfg.f, cfg.model, cfg.a, cfg.b);
  study.i3 = rho_triple_convolution(cfg.model);
  const HermiteCoeffs fp = hermite_derivative(cfg.f);
  study.fp4 = hermite_fourth_moment(fp);
  study.fpp4 = hermite_fourth_moment(hermite_derivative(fp));

  const double width = cfg.b - cfg.a;
  const auto replicas = static_cast<std::size_t>(cfg.replicas);

  for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
    const double t = cfg.t_grid[ti];
    const auto m =
        static_cast<std::size_t>(std::llround(width * t / cfg.delta));
    std::vector<double> grid(m);
    for (std::size_t i = 0; i < m; ++i) {
      grid[i] = cfg.a * t + (static_cast<double>(i) + 0.5) * cfg.delta;
    }
    const IncrementSampler sampler(cfg.model, grid);

    std::vector<double> values(replicas);
    auto fill = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        const std::uint64_t rs = substream_seed(
            cfg.seed, kTagReplica,
            static_cast<std::uint64_t>(ti) * replicas + r);
        const auto path = sampler.sample(rs);
        values[r] = compute_FT(path, cfg.f, cfg.a, cfg.b, t, cfg.delta);
      }
    };
    const std::size_t nw =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), replicas);
    if (nw <= 1) {
      fill(0, replicas);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back(fill, replicas * w / nw, replicas * (w + 1) / nw);
      }
      for (auto& th : pool) th.join();
    }

    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(replicas);
    double m2 = 0.0, m4 = 0.0;
    for (const double v : values) {
      const double d = v - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    const double var = m2 / static_cast<double>(replicas - 1);
    m4 /= static_cast<double>(replicas);

    RateRow row;
    row.t = t;
    row.grid_points = m;
    row.jitter = sampler.jitter();
    row.var_emp = var;
    row.var_emp_stderr =
        std::sqrt(std::max(0.0, m4 - var * var) /
                  static_cast<double>(replicas));
    row.var_grid = grid_variance(cfg.f, cfg.model, cfg.a, cfg.b, t, cfg.delta);

    const double sd = std::sqrt(var);
    std::vector<double> standardized(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
      standardized[r] = (values[r] - mean) / sd;
    }
    const DwEstimate dw = empirical_dw_1d_boot(
        EmpiricalSample(std::move(standardized)),
        substream_seed(cfg.seed, kTagRateBoot, static_cast<std::uint64_t>(ti)));
    row.dw = dw.value;
    row.dw_stderr = dw.stderr_;

    const QuadResult d_int = weighted_rho_l1(cfg.model, width, t);
    row.grad_term = study.fp4 * d_int.value * d_int.value;
    row.hess_term = study.fpp4 * width * study.i3.value / t;
    row.bound_w = 0.5 * std::sqrt(10.0) *
                  std::pow(row.hess_term, 0.25) *
                  std::pow(row.grad_term, 0.25) / var;
    row.bound_w_stderr = row.bound_w * row.var_emp_stderr / var;

    if (row.dw > row.bound_w + 4.0 * (row.dw_stderr + row.bound_w_stderr)) {
      study.dominated = false;
    }
    study.rows.push_back(row);
  }

  if (study.rows.size() >= 2) {
    std::vector<double> ts, dws, bounds;
    for (const auto& row : study.rows) {
      ts.push_back(row.t);
      dws.push_back(row.dw);
      bounds.push_back(row.bound_w);
    }
    study.slope_dw = detail::loglog_slope(ts, dws);
    study.slope_bound = detail::loglog_slope(ts, bounds);
  }
  return study;
}

}  // namespace wchaos

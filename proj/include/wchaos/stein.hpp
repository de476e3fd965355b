#pragma once

// Normal-approximation bounds for chaos functionals, pitted against an
// empirical Wasserstein estimate of the same functional.
//
// Every univariate bound is computed for the standardized functional
// (F - mu)/sigma with mu and sigma^2 taken exactly from the expansion
// (isometry), never estimated; this keeps the degenerate cases exact
// (first chaos gives bound 0 with zero standard error) and makes bounds
// comparable across functionals. The TV bounds presuppose absolute
// continuity of the law of F, which holds for every non-constant
// polynomial functional of a Gaussian vector.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wchaos/chaos.hpp"
#include "wchaos/distance.hpp"
#include "wchaos/mc.hpp"

namespace wchaos {

inline constexpr double kSigma2Floor = 1e-10;

// Substream tags, one per consumer of randomness.
inline constexpr std::uint64_t kTagWStat = 0x57535441ULL;
inline constexpr std::uint64_t kTagGradHess = 0x47524144ULL;
inline constexpr std::uint64_t kTagEmpirical = 0x454d5031ULL;
inline constexpr std::uint64_t kTagPoincare = 0x504f494eULL;
inline constexpr std::uint64_t kTagMultidim = 0x4d554c54ULL;

struct BoundValue {
  double value = 0.0;
  double stderr_ = 0.0;
  // Set when stderr exceeds 10% of the value; heavy-tailed fourth-moment
  // statistics are reported rather than rejected.
  bool low_confidence = false;
};

struct BoundPair {
  BoundValue w;
  BoundValue tv;
};

namespace detail {

inline BoundValue make_bound(double value, double se) {
  BoundValue b;
  b.value = value;
  b.stderr_ = se;
  b.low_confidence = (value > 0.0 && se > 0.1 * value);
  return b;
}

// scale * mean_a^{1/4} * mean_b^{1/4} with a conservative (summed) delta
// method error. A mean of exactly zero comes from an identically-zero
// statistic, so the product is exact.
inline BoundValue quarter_product(double scale, const McStat& a,
                                  const McStat& b) {
  if (a.mean <= 0.0 || b.mean <= 0.0) return make_bound(0.0, 0.0);
  const double qa = std::pow(a.mean, 0.25);
  const double qb = std::pow(b.mean, 0.25);
  const double value = scale * qa * qb;
  const double se = scale * (0.25 * std::pow(a.mean, -0.75) * a.stderr_ * qb +
                             0.25 * std::pow(b.mean, -0.75) * b.stderr_ * qa);
  return make_bound(value, se);
}

inline double spectral_norm_sym(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

// Pointwise evaluator for the gradient and Hessian of a functional. Owns its
// evaluation plans; copy per worker, the eval call mutates scratch.
class MalliavinProbe {
 public:
  explicit MalliavinProbe(const ChaosVector& F) : dim_(F.dim()) {
    const ChaosGradient grad = malliavin_d(F);
    const ChaosHessian hess = malliavin_d2(F);
    for (int j = 0; j < dim_; ++j) dplans_.emplace_back(grad.component[j]);
    for (int j = 0; j < dim_; ++j) {
      for (int k = j; k < dim_; ++k) hplans_.emplace_back(hess.at(j, k));
    }
    grad_.resize(dim_);
    hess_.resize(dim_, dim_);
  }

  int dim() const { return dim_; }

  void eval(const double* g) {
    for (int j = 0; j < dim_; ++j) grad_[j] = dplans_[j](g);
    std::size_t idx = 0;
    for (int j = 0; j < dim_; ++j) {
      for (int k = j; k < dim_; ++k, ++idx) {
        const double v = hplans_[idx](g);
        hess_(j, k) = v;
        hess_(k, j) = v;
      }
    }
  }

  double grad_norm_sq() const { return grad_.squaredNorm(); }
  double hess_op_norm() const { return detail::spectral_norm_sym(hess_); }
  double hess_contraction_sq() const { return (hess_ * hess_).squaredNorm(); }

 private:
  int dim_;
  std::vector<EvalPlan> dplans_;
  std::vector<EvalPlan> hplans_;
  Eigen::VectorXd grad_;
  Eigen::MatrixXd hess_;
};

struct FirstOrderBound {
  BoundValue w;      // E|1 - W|
  BoundValue w_l2;   // E[(1-W)^2]^{1/2}, always >= w
  BoundValue tv;     // 2 E|1 - W|
  BoundValue tv_l2;  // 2 E[(1-W)^2]^{1/2}
  double w_mean = 0.0;  // MC mean of W itself (should be 1)
  double w_mean_stderr = 0.0;
};

// d_W(F,Z) <= E|1 - <DF, -D L^{-1} F>| for standardized F; the TV bound is
// twice the Wasserstein one.
inline FirstOrderBound first_order_bound(const ChaosVector& F,
                                         std::uint64_t n, std::uint64_t seed,
                                         int workers = 1) {
  const ChaosVector Z = F.standardized();
  WFunctional wf(Z);
  const int d = Z.dim();
  auto stats = mc_run(
      n, 3, seed, kTagWStat, workers,
      [wf, d, g = std::vector<double>()](NormalGen& gen, double* out) mutable {
        g.resize(d);
        for (int j = 0; j < d; ++j) g[j] = gen();
        const double w = wf(g.data());
        out[0] = std::abs(1.0 - w);
        out[1] = (1.0 - w) * (1.0 - w);
        out[2] = w;
      });
  FirstOrderBound out;
  out.w = detail::make_bound(stats[0].mean, stats[0].stderr_);
  if (stats[1].mean <= 0.0) {
    out.w_l2 = detail::make_bound(0.0, 0.0);
  } else {
    const double root = std::sqrt(stats[1].mean);
    out.w_l2 = detail::make_bound(root, stats[1].stderr_ / (2.0 * root));
  }
  out.tv = detail::make_bound(2.0 * out.w.value, 2.0 * out.w.stderr_);
  out.tv_l2 = detail::make_bound(2.0 * out.w_l2.value, 2.0 * out.w_l2.stderr_);
  out.w_mean = stats[2].mean;
  out.w_mean_stderr = stats[2].stderr_;
  return out;
}

struct SecondOrderStats {
  McStat grad4;    // E ||DF||^4
  McStat hess4;    // E ||D^2F||_op^4
  McStat contr2;   // E ||D^2F (x)_1 D^2F||^2
};

inline SecondOrderStats second_order_stats(const ChaosVector& Z,
                                           std::uint64_t n, std::uint64_t seed,
                                           int workers = 1) {
  MalliavinProbe probe(Z);
  const int d = Z.dim();
  auto stats = mc_run(
      n, 3, seed, kTagGradHess, workers,
      [probe, d, g = std::vector<double>()](NormalGen& gen,
                                            double* out) mutable {
        g.resize(d);
        for (int j = 0; j < d; ++j) g[j] = gen();
        probe.eval(g.data());
        const double gn = probe.grad_norm_sq();
        const double op = probe.hess_op_norm();
        out[0] = gn * gn;
        out[1] = op * op * op * op;
        out[2] = probe.hess_contraction_sq();
      });
  return SecondOrderStats{stats[0], stats[1], stats[2]};
}

// d_W(F,Z) <= (sqrt(10)/2) E[||D^2F||_op^4]^{1/4} E[||DF||^4]^{1/4} on the
// standardized functional (sigma = 1); TV carries sqrt(10) instead.
inline BoundPair second_order_bound(const ChaosVector& F, std::uint64_t n,
                                    std::uint64_t seed, int workers = 1) {
  const ChaosVector Z = F.standardized();
  const auto s = second_order_stats(Z, n, seed, workers);
  BoundPair out;
  out.w = detail::quarter_product(0.5 * std::sqrt(10.0), s.hess4, s.grad4);
  out.tv = detail::quarter_product(std::sqrt(10.0), s.hess4, s.grad4);
  return out;
}

// Same shape with the operator norm replaced through the random contraction
// inequality ||D^2F||_op^4 <= ||D^2F (x)_1 D^2F||^2, which holds pointwise.
inline BoundPair contraction_bound(const ChaosVector& F, std::uint64_t n,
                                   std::uint64_t seed, int workers = 1) {
  const ChaosVector Z = F.standardized();
  const auto s = second_order_stats(Z, n, seed, workers);
  BoundPair out;
  out.w = detail::quarter_product(0.5 * std::sqrt(10.0), s.contr2, s.grad4);
  out.tv = detail::quarter_product(std::sqrt(10.0), s.contr2, s.grad4);
  return out;
}

struct PoincareRow {
  double lhs = 0.0, lhs_stderr = 0.0;
  double rhs = 0.0, rhs_stderr = 0.0;
  bool holds = false;  // lhs <= rhs + 4 (lhs_stderr + rhs_stderr)
};

struct PoincareReport {
  int p = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double factor_b = 0.0;  // exactly 1 / 2^p
  double factor_c = 0.0;  // (p - 1)^{p/2}
  PoincareRow a;          // E||D L^{-1}F||^p  <= E||DF||^p
  PoincareRow b;          // E||D^2 L^{-1}F||_op^p <= (1/2^p) E||D^2F||_op^p
  PoincareRow c;          // E[F^p] <= (p-1)^{p/2} E||DF||^p
};

inline PoincareReport poincare_suite(const ChaosVector& F_in, int p,
                                     std::uint64_t n, std::uint64_t seed,
                                     int workers = 1) {
  if (p < 2 || p % 2 != 0) {
    throw std::invalid_argument("poincare_suite: p must be even and >= 2");
  }
  const ChaosVector F = F_in.centered();
  const ChaosVector G = apply_Linv(F);
  MalliavinProbe pf(F);
  MalliavinProbe pg(G);
  EvalPlan plan(F);
  const int d = F.dim();
  const double hp = 0.5 * p;
  auto stats = mc_run(
      n, 5, seed, kTagPoincare, workers,
      [pf, pg, plan, d, hp, p,
       g = std::vector<double>()](NormalGen& gen, double* out) mutable {
        g.resize(d);
        for (int j = 0; j < d; ++j) g[j] = gen();
        pf.eval(g.data());
        pg.eval(g.data());
        out[0] = std::pow(pg.grad_norm_sq(), hp);
        out[1] = std::pow(pf.grad_norm_sq(), hp);
        out[2] = std::pow(pg.hess_op_norm(), p);
        out[3] = std::pow(pf.hess_op_norm(), p);
        out[4] = std::pow(plan(g.data()), p);
      });
  PoincareReport rep;
  rep.p = p;
  rep.n = n;
  rep.seed = seed;
  rep.factor_b = std::pow(2.0, -p);
  rep.factor_c = std::pow(static_cast<double>(p - 1), hp);
  auto fill = [](PoincareRow& row, const McStat& l, const McStat& r,
                 double rscale) {
    row.lhs = l.mean;
    row.lhs_stderr = l.stderr_;
    row.rhs = rscale * r.mean;
    row.rhs_stderr = rscale * r.stderr_;
    row.holds = row.lhs <= row.rhs + 4.0 * (row.lhs_stderr + row.rhs_stderr);
  };
  fill(rep.a, stats[0], stats[1], 1.0);
  fill(rep.b, stats[2], stats[3], rep.factor_b);
  fill(rep.c, stats[4], stats[1], rep.factor_c);
  return rep;
}

struct MultidimReport {
  double bound = 0.0;
  double bound_stderr = 0.0;
  double c_op = 0.0;      // ||C||_op
  double cinv_op = 0.0;   // ||C^{-1}||_op
  double sum_hess = 0.0;  // sum_i E[||D^2F_i||_op^4]^{1/4}
  double sum_grad = 0.0;  // sum_j E[||DF_j||^4]^{1/4}
  bool cov_warning = false;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

// (3 sqrt(2)/2) ||C^{-1}||_op ||C||_op^{1/2}
//   * sum_i E[||D^2F_i||_op^4]^{1/4} * sum_j E[||DF_j||^4]^{1/4}
// for a vector of centered functionals with target covariance C.
inline MultidimReport multidim_bound(const std::vector<ChaosVector>& Fs,
                                     const Eigen::MatrixXd& C, std::uint64_t n,
                                     std::uint64_t seed, int workers = 1) {
  const auto m = static_cast<Eigen::Index>(Fs.size());
  if (m < 2) throw std::invalid_argument("multidim_bound: need >= 2");
  if (C.rows() != m || C.cols() != m) {
    throw std::invalid_argument("multidim_bound: covariance shape");
  }
  if (!C.isApprox(C.transpose(), 1e-12)) {
    throw std::invalid_argument("multidim_bound: covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0) {
    throw std::invalid_argument("multidim_bound: covariance not positive"
                                " definite");
  }
  const int d = Fs.front().dim();
  std::vector<MalliavinProbe> probes;
  std::vector<EvalPlan> plans;
  probes.reserve(Fs.size());
  for (const auto& F : Fs) {
    if (F.dim() != d) throw std::invalid_argument("multidim_bound: dim");
    probes.emplace_back(F.centered());
    plans.emplace_back(F.centered());
  }

  // Statistics: per i the pair (||DF_i||^4, ||D^2F_i||_op^4), then the
  // product moments F_i F_j for the covariance consistency check.
  const std::size_t npairs = static_cast<std::size_t>(m) * (m + 1) / 2;
  const std::size_t nstats = 2 * static_cast<std::size_t>(m) + npairs;
  auto stats = mc_run(
      n, nstats, seed, kTagMultidim, workers,
      [probes, plans, d, m, g = std::vector<double>(),
       vals = std::vector<double>()](NormalGen& gen, double* out) mutable {
        g.resize(d);
        vals.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < d; ++j) g[j] = gen();
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
          probes[i].eval(g.data());
          const double gn = probes[i].grad_norm_sq();
          const double op = probes[i].hess_op_norm();
          out[idx++] = gn * gn;
          out[idx++] = op * op * op * op;
          vals[i] = plans[i](g.data());
        }
        for (Eigen::Index i = 0; i < m; ++i) {
          for (Eigen::Index j = i; j < m; ++j) out[idx++] = vals[i] * vals[j];
        }
      });

  MultidimReport rep;
  rep.n = n;
  rep.seed = seed;
  rep.c_op = lmax;
  rep.cinv_op = 1.0 / lmin;
  double sum_grad = 0.0, sum_grad_se = 0.0;
  double sum_hess = 0.0, sum_hess_se = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const McStat& g4 = stats[2 * i];
    const McStat& h4 = stats[2 * i + 1];
    if (g4.mean > 0.0) {
      sum_grad += std::pow(g4.mean, 0.25);
      sum_grad_se += 0.25 * std::pow(g4.mean, -0.75) * g4.stderr_;
    }
    if (h4.mean > 0.0) {
      sum_hess += std::pow(h4.mean, 0.25);
      sum_hess_se += 0.25 * std::pow(h4.mean, -0.75) * h4.stderr_;
    }
  }
  rep.sum_grad = sum_grad;
  rep.sum_hess = sum_hess;
  const double prefactor = 1.5 * std::sqrt(2.0) * rep.cinv_op *
                           std::sqrt(rep.c_op);
  rep.bound = prefactor * sum_hess * sum_grad;
  rep.bound_stderr =
      prefactor * (sum_hess_se * sum_grad + sum_hess * sum_grad_se);

  std::size_t idx = 2 * static_cast<std::size_t>(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j, ++idx) {
      const McStat& s = stats[idx];
      if (std::abs(s.mean - C(i, j)) > 4.0 * s.stderr_) {
        rep.cov_warning = true;
      }
    }
  }
  return rep;
}

struct BoundReport {
  std::string functional;
  std::string kind;  // first_order, first_order_l2, second_order, contraction
  double mu = 0.0;
  double sigma2 = 0.0;
  BoundValue w;
  BoundValue tv;
  DwEstimate dw;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  bool violation = false;
};

// Draw n standardized samples and return the empirical Wasserstein distance
// with a bootstrap standard error.
inline DwEstimate empirical_dw_of(const ChaosVector& F, std::uint64_t n,
                                  std::uint64_t seed, int workers = 1) {
  const ChaosVector Z = F.standardized();
  EvalPlan plan(Z);
  const int d = Z.dim();
  std::vector<double> draws;
  draws.resize(n);
  // One plan copy per chunk, filled deterministically in chunk order.
  const std::uint64_t n_chunks = (n + kMcChunk - 1) / kMcChunk;
  (void)workers;
  std::vector<double> g(d);
  for (std::uint64_t ci = 0; ci < n_chunks; ++ci) {
    NormalGen gen(seed, kTagEmpirical, ci);
    EvalPlan local = plan;
    const std::uint64_t lo = ci * kMcChunk;
    const std::uint64_t hi = std::min<std::uint64_t>(n, lo + kMcChunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      for (int j = 0; j < d; ++j) g[j] = gen();
      draws[i] = local(g.data());
    }
  }
  return empirical_dw_1d_boot(EmpiricalSample(std::move(draws)), seed);
}

// Full per-functional report: all four bound kinds against one empirical
// distance estimate. A violation is flagged when the empirical distance
// exceeds the Wasserstein bound by more than 4 combined standard errors.
inline std::vector<BoundReport> stein_reports(const std::string& id,
                                              const ChaosVector& F,
                                              std::uint64_t n,
                                              std::uint64_t seed,
                                              int workers = 1) {
  const double mu = F.mean();
  const double sigma2 = F.variance();
  const auto first = first_order_bound(F, n, seed, workers);
  const auto second = second_order_bound(F, n, seed, workers);
  const auto contr = contraction_bound(F, n, seed, workers);
  const auto dw = empirical_dw_of(F, n, seed, workers);

  auto make = [&](const char* kind, const BoundValue& w,
                  const BoundValue& tv) {
    BoundReport r;
    r.functional = id;
    r.kind = kind;
    r.mu = mu;
    r.sigma2 = sigma2;
    r.w = w;
    r.tv = tv;
    r.dw = dw;
    r.n_samples = n;
    r.seed = seed;
    r.violation =
        dw.value > w.value + 4.0 * (w.stderr_ + dw.stderr_);
    return r;
  };
  return {make("first_order", first.w, first.tv),
          make("first_order_l2", first.w_l2, first.tv_l2),
          make("second_order", second.w, second.tv),
          make("contraction", contr.w, contr.tv)};
}

}  // namespace wchaos

#pragma once

// Finite chaos expansions F = sum_q I_q(f_q) over R^d and their calculus.
//
// Normalization: I_q is fixed by I_q(h^{(x)q}) = ||h||^q H_q(X(h)/||h||) with
// the leading-coefficient-1 Hermite convention. Under this choice the isometry
// E[I_p(f) I_q(g)] = delta_pq q! <f,g> and the multiplication formula hold
// simultaneously. Concretely, on the coordinate basis the symmetrized product
// e_1^{a_1} o ... o e_d^{a_d} (|a| = q) evaluates to prod_k H_{a_k}(g_k), and
// everything extends linearly over canonical coefficients with their
// permutation multiplicities.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wchaos/hermite.hpp"
#include "wchaos/mc.hpp"
#include "wchaos/sym_tensor.hpp"

namespace wchaos {

inline constexpr int kMaxChaosOrder = 8;

struct GaussianSample {
  std::vector<double> g;
};

class ChaosVector {
 public:
  explicit ChaosVector(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("ChaosVector: dim < 1");
  }

  static ChaosVector constant(int dim, double c) {
    ChaosVector f(dim);
    if (c != 0.0) f.add_term(0, SymTensor::scalar(dim, c));
    return f;
  }

  static ChaosVector pure(int q, SymTensor f) {
    ChaosVector out(f.dim());
    out.add_term(q, std::move(f));
    return out;
  }

  int dim() const { return dim_; }

  int max_order() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first;
  }

  const std::map<int, SymTensor>& terms() const { return terms_; }

  const SymTensor* term(int q) const {
    const auto it = terms_.find(q);
    return it == terms_.end() ? nullptr : &it->second;
  }

  void add_term(int q, const SymTensor& f) {
    if (q < 0 || q > kMaxChaosOrder) {
      throw std::invalid_argument("ChaosVector: order outside [0,8]");
    }
    if (f.dim() != dim_ || f.order() != q) {
      throw std::invalid_argument("ChaosVector: kernel shape mismatch");
    }
    auto it = terms_.find(q);
    if (it == terms_.end()) {
      if (!f.coeffs().empty()) terms_.emplace(q, f);
    } else {
      it->second += f;
      if (it->second.coeffs().empty()) terms_.erase(it);
    }
  }

  double mean() const {
    const SymTensor* c = term(0);
    return c ? c->at({}) : 0.0;
  }

  // Exact, from the isometry: Var F = sum_{q>=1} q! ||f_q||^2.
  double variance() const {
    double v = 0.0;
    for (const auto& [q, f] : terms_) {
      if (q >= 1) v += factorial(q) * f.norm_sq();
    }
    return v;
  }

  double second_moment() const { return variance() + mean() * mean(); }

  ChaosVector scaled(double c) const {
    ChaosVector out(dim_);
    if (c == 0.0) return out;
    for (const auto& [q, f] : terms_) out.terms_.emplace(q, f.scaled(c));
    return out;
  }

  ChaosVector plus(const ChaosVector& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("ChaosVector: dim");
    ChaosVector out = *this;
    for (const auto& [q, f] : o.terms_) out.add_term(q, f);
    return out;
  }

  ChaosVector centered() const {
    ChaosVector out = *this;
    out.terms_.erase(0);
    return out;
  }

  // (F - E F) / sqrt(Var F), exact moments from the expansion.
  ChaosVector standardized() const {
    const double v = variance();
    if (v < 1e-10) {
      throw std::domain_error("ChaosVector: variance below 1e-10");
    }
    return centered().scaled(1.0 / std::sqrt(v));
  }

 private:
  int dim_;
  std::map<int, SymTensor> terms_;
};

// Flattened evaluation plan: one multiplicative term per canonical tuple,
// factors stored as (coordinate, hermite order). A fresh Hermite table is
// built per sample (qmax+1 rows by dim columns). The plan carries its own
// scratch, so copy the plan per worker; operator() is not safe to share.
class EvalPlan {
 public:
  explicit EvalPlan(const ChaosVector& F) : dim_(F.dim()), constant_(0.0) {
    qmax_ = 1;  // keep at least H_1 so the table layout is trivial
    for (const auto& [q, f] : F.terms()) {
      if (q == 0) {
        constant_ += f.at({});
        continue;
      }
      qmax_ = std::max(qmax_, q);
      for (const auto& [t, v] : f.coeffs()) {
        Term term;
        term.coeff = v * tuple_multiplicity(t);
        term.begin = static_cast<int>(factors_.size());
        std::size_t i = 0;
        while (i < t.size()) {
          std::size_t j = i;
          while (j < t.size() && t[j] == t[i]) ++j;
          factors_.push_back({t[i], static_cast<int>(j - i)});
          i = j;
        }
        term.end = static_cast<int>(factors_.size());
        terms_.push_back(term);
      }
    }
  }

  int dim() const { return dim_; }

  double operator()(const double* g) {
    htab_.resize(static_cast<std::size_t>(qmax_ + 1) * dim_);
    for (int j = 0; j < dim_; ++j) {
      double* col = htab_.data() + static_cast<std::size_t>(j) * (qmax_ + 1);
      hermite_eval_all(qmax_, g[j], col);
    }
    double acc = constant_;
    for (const Term& term : terms_) {
      double prod = term.coeff;
      for (int k = term.begin; k < term.end; ++k) {
        const Factor& f = factors_[k];
        prod *= htab_[static_cast<std::size_t>(f.coord) * (qmax_ + 1) + f.order];
      }
      acc += prod;
    }
    return acc;
  }

  double operator()(const GaussianSample& s) {
    if (static_cast<int>(s.g.size()) != dim_) {
      throw std::invalid_argument("EvalPlan: sample dim mismatch");
    }
    return (*this)(s.g.data());
  }

 private:
  struct Factor {
    int coord;
    int order;
  };
  struct Term {
    double coeff;
    int begin;
    int end;
  };
  int dim_;
  int qmax_;
  double constant_;
  std::vector<Term> terms_;
  std::vector<Factor> factors_;
  std::vector<double> htab_;
};

inline double eval(const ChaosVector& F, const GaussianSample& s) {
  EvalPlan plan(F);
  return plan(s);
}

struct ChaosGradient {
  int dim = 0;
  std::vector<ChaosVector> component;  // component[j] = D_j F
};

struct ChaosHessian {
  int dim = 0;
  std::vector<ChaosVector> upper;  // packed (j,k), j <= k

  static std::size_t packed_index(int dim, int j, int k) {
    if (j > k) std::swap(j, k);
    return static_cast<std::size_t>(j) * dim -
           static_cast<std::size_t>(j) * (j - 1) / 2 + (k - j);
  }
  const ChaosVector& at(int j, int k) const {
    return upper[packed_index(dim, j, k)];
  }
  ChaosVector& at(int j, int k) { return upper[packed_index(dim, j, k)]; }
};

// D_j F = sum_q q I_{q-1}(f_q(., e_j)). Slot substitution on canonical
// storage: the kernel of D_j at tuple s is f_q at sort(s + j), so each stored
// tuple t of f_q feeds exactly the components j in t with the reduced tuple.
inline ChaosGradient malliavin_d(const ChaosVector& F) {
  const int d = F.dim();
  ChaosGradient grad;
  grad.dim = d;
  grad.component.assign(d, ChaosVector(d));
  for (const auto& [q, f] : F.terms()) {
    if (q < 1) continue;
    std::vector<SymTensor> slot(d, SymTensor(q - 1, d));
    for (const auto& [t, v] : f.coeffs()) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0 && t[i] == t[i - 1]) continue;  // distinct j only
        IndexTuple reduced;
        reduced.reserve(t.size() - 1);
        for (std::size_t m = 0; m < t.size(); ++m) {
          if (m != i) reduced.push_back(t[m]);
        }
        slot[t[i]].set(std::move(reduced), v);
      }
    }
    for (int j = 0; j < d; ++j) {
      if (!slot[j].coeffs().empty()) {
        grad.component[j].add_term(q - 1, slot[j].scaled(q));
      }
    }
  }
  return grad;
}

// D2_{jk} F = sum_q q(q-1) I_{q-2}(f_q(., e_j, e_k)), symmetric in (j,k).
inline ChaosHessian malliavin_d2(const ChaosVector& F) {
  const int d = F.dim();
  ChaosHessian hess;
  hess.dim = d;
  hess.upper.assign(static_cast<std::size_t>(d) * (d + 1) / 2, ChaosVector(d));
  for (const auto& [q, f] : F.terms()) {
    if (q < 2) continue;
    std::map<std::pair<int, int>, SymTensor> slot;
    for (const auto& [t, v] : f.coeffs()) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0 && t[i] == t[i - 1]) continue;
        for (std::size_t j = i; j < t.size(); ++j) {
          if (j == i) {
            // (t[i], t[i]) needs the index twice in the tuple.
            if (j + 1 >= t.size() || t[j + 1] != t[i]) continue;
          } else if (t[j] == t[j - 1] && t[j - 1] != t[i]) {
            continue;  // distinct second index only
          } else if (t[j] == t[i]) {
            continue;  // the equal-pair case is handled at j == i
          }
          const int a = t[i];
          const int b = (j == i) ? t[i] : t[j];
          IndexTuple reduced;
          reduced.reserve(t.size() - 2);
          const std::size_t skip2 = (j == i) ? i + 1 : j;
          for (std::size_t m = 0; m < t.size(); ++m) {
            if (m != i && m != skip2) reduced.push_back(t[m]);
          }
          auto key = std::make_pair(a, b);
          auto it = slot.find(key);
          if (it == slot.end()) {
            it = slot.emplace(key, SymTensor(q - 2, d)).first;
          }
          it->second.set(std::move(reduced), v);
        }
      }
    }
    const double scale = static_cast<double>(q) * (q - 1);
    for (auto& [jk, kernel] : slot) {
      if (!kernel.coeffs().empty()) {
        hess.at(jk.first, jk.second).add_term(q - 2, kernel.scaled(scale));
      }
    }
  }
  return hess;
}

// Multiplication formula:
// I_p(f) I_q(g) = sum_{r=0}^{p^q} r! C(p,r) C(q,r) I_{p+q-2r}(sym(f (x)_r g)).
inline ChaosVector multiply(int p, const SymTensor& f, int q,
                            const SymTensor& g) {
  if (f.order() != p || g.order() != q) {
    throw std::invalid_argument("multiply: kernel order mismatch");
  }
  if (f.dim() != g.dim()) throw std::invalid_argument("multiply: dim");
  ChaosVector out(f.dim());
  for (int r = 0; r <= std::min(p, q); ++r) {
    const double c = factorial(r) * binomial(p, r) * binomial(q, r);
    const SymTensor kernel = contract_sym(f, g, r);
    if (!kernel.coeffs().empty()) {
      out.add_term(p + q - 2 * r, kernel.scaled(c));
    }
  }
  return out;
}

inline ChaosVector multiply(const ChaosVector& A, const ChaosVector& B) {
  if (A.dim() != B.dim()) throw std::invalid_argument("multiply: dim");
  ChaosVector out(A.dim());
  for (const auto& [p, f] : A.terms()) {
    for (const auto& [q, g] : B.terms()) {
      out = out.plus(multiply(p, f, q, g));
    }
  }
  return out;
}

// L = sum_q (-q) J_q; the q = 0 term is annihilated.
inline ChaosVector apply_L(const ChaosVector& F) {
  ChaosVector out(F.dim());
  for (const auto& [q, f] : F.terms()) {
    if (q >= 1) out.add_term(q, f.scaled(-static_cast<double>(q)));
  }
  return out;
}

// L^{-1} = sum_{q>=1} (-1/q) J_q; ignores the q = 0 term.
inline ChaosVector apply_Linv(const ChaosVector& F) {
  ChaosVector out(F.dim());
  for (const auto& [q, f] : F.terms()) {
    if (q >= 1) out.add_term(q, f.scaled(-1.0 / q));
  }
  return out;
}

// T_t = sum_q e^{-qt} J_q.
inline ChaosVector ou_semigroup(const ChaosVector& F, double t) {
  if (t < 0.0) throw std::invalid_argument("ou_semigroup: negative t");
  ChaosVector out(F.dim());
  for (const auto& [q, f] : F.terms()) {
    out.add_term(q, f.scaled(std::exp(-q * t)));
  }
  return out;
}

// Monte Carlo side of Mehler's interpolation: average of
// eval(F, e^{-t} s + sqrt(1-e^{-2t}) G') over independent standard G'.
inline McStat mehler_mc(const ChaosVector& F, double t, const GaussianSample& s,
                        std::uint64_t n, std::uint64_t seed, int workers = 1) {
  if (t < 0.0) throw std::invalid_argument("mehler_mc: negative t");
  if (n < 2) throw std::invalid_argument("mehler_mc: n < 2");
  if (static_cast<int>(s.g.size()) != F.dim()) {
    throw std::invalid_argument("mehler_mc: sample dim mismatch");
  }
  const double a = std::exp(-t);
  const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
  const int d = F.dim();
  auto stats = mc_run(
      n, 1, seed, /*tag=*/0x6d65686cULL, workers,
      [plan = EvalPlan(F), base = s.g, a, b, d,
       y = std::vector<double>()](NormalGen& gen, double* out) mutable {
        y.resize(d);
        for (int j = 0; j < d; ++j) y[j] = a * base[j] + b * gen();
        out[0] = plan(y.data());
      });
  return stats[0];
}

// W = <DF, -D L^{-1} F> evaluated pointwise. Plans are built once; copy the
// functor per worker (operator() mutates scratch).
class WFunctional {
 public:
  explicit WFunctional(const ChaosVector& F) : dim_(F.dim()) {
    const ChaosGradient df = malliavin_d(F);
    const ChaosGradient dg = malliavin_d(apply_Linv(F).scaled(-1.0));
    for (int j = 0; j < dim_; ++j) {
      df_.emplace_back(df.component[j]);
      dg_.emplace_back(dg.component[j]);
    }
  }

  double operator()(const double* g) {
    double w = 0.0;
    for (int j = 0; j < dim_; ++j) w += df_[j](g) * dg_[j](g);
    return w;
  }

  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<EvalPlan> df_;
  std::vector<EvalPlan> dg_;
};

inline double w_statistic(const ChaosVector& F, const GaussianSample& s) {
  if (static_cast<int>(s.g.size()) != F.dim()) {
    throw std::invalid_argument("w_statistic: sample dim mismatch");
  }
  WFunctional w(F);
  return w(s.g.data());
}

}  // namespace wchaos

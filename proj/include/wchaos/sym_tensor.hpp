#pragma once

// Symmetric tensor algebra over R^d with the coordinate orthonormal basis.
// Storage is canonical sparse: a map keyed by non-decreasing index tuples,
// each entry holding the common value of the symmetric coefficient array over
// all permutations of that tuple. Contractions go through a dense row-major
// expansion and a single GEMM; a size guard rejects dense shapes past 2^26
// entries, which is far beyond anything the experiments need (order <= 6,
// d <= 512 by configuration upstream).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "wchaos/hermite.hpp"

namespace wchaos {

using IndexTuple = std::vector<int>;

inline constexpr std::uint64_t kDenseEntryGuard = std::uint64_t{1} << 26;

inline std::uint64_t dense_size_checked(int dim, int order) {
  std::uint64_t n = 1;
  for (int k = 0; k < order; ++k) {
    n *= static_cast<std::uint64_t>(dim);
    if (n > kDenseEntryGuard) {
      throw std::length_error("dense tensor exceeds the 2^26 entry guard");
    }
  }
  return n;
}

// Number of distinct permutations of a sorted tuple: q! / prod(counts!).
inline double tuple_multiplicity(const IndexTuple& t) {
  double mult = factorial(static_cast<int>(t.size()));
  std::size_t i = 0;
  while (i < t.size()) {
    std::size_t j = i;
    while (j < t.size() && t[j] == t[i]) ++j;
    mult /= factorial(static_cast<int>(j - i));
    i = j;
  }
  return mult;
}

// Iterates non-decreasing tuples of a fixed length over {0..dim-1} in
// lexicographic order. An order-0 tensor has exactly one (empty) tuple.
inline bool next_canonical_tuple(IndexTuple& t, int dim) {
  for (int pos = static_cast<int>(t.size()) - 1; pos >= 0; --pos) {
    if (t[pos] + 1 < dim) {
      const int v = t[pos] + 1;
      for (std::size_t k = pos; k < t.size(); ++k) t[k] = v;
      return true;
    }
  }
  return false;
}

class SymTensor {
 public:
  SymTensor(int order, int dim) : order_(order), dim_(dim) {
    if (order < 0 || dim < 1) {
      throw std::invalid_argument("SymTensor: bad shape");
    }
  }

  // Symmetrized basis element e_{i1} o ... o e_{iq} (coefficient 1 on the
  // canonical tuple; the dense array then has 1 on every permutation).
  static SymTensor basis(int dim, IndexTuple idx) {
    SymTensor t(static_cast<int>(idx.size()), dim);
    t.set(std::move(idx), 1.0);
    return t;
  }

  static SymTensor scalar(int dim, double value) {
    SymTensor t(0, dim);
    t.set({}, value);
    return t;
  }

  int order() const { return order_; }
  int dim() const { return dim_; }
  const std::map<IndexTuple, double>& coeffs() const { return coeffs_; }

  double at(IndexTuple t) const {
    canonicalize(t);
    const auto it = coeffs_.find(t);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  void set(IndexTuple t, double v) {
    canonicalize(t);
    if (v == 0.0) {
      coeffs_.erase(t);
    } else {
      coeffs_[std::move(t)] = v;
    }
  }

  void add(IndexTuple t, double v) {
    canonicalize(t);
    const double nv = (coeffs_.count(t) ? coeffs_[t] : 0.0) + v;
    if (nv == 0.0) {
      coeffs_.erase(t);
    } else {
      coeffs_[std::move(t)] = nv;
    }
  }

  SymTensor scaled(double c) const {
    SymTensor out(order_, dim_);
    if (c == 0.0) return out;
    for (const auto& [t, v] : coeffs_) out.coeffs_[t] = c * v;
    return out;
  }

  SymTensor& operator+=(const SymTensor& o) {
    require_same_shape(o);
    for (const auto& [t, v] : o.coeffs_) add(t, v);
    return *this;
  }

  // Frobenius norm of the full symmetric array: sum over canonical tuples of
  // multiplicity * value^2.
  double norm_sq() const {
    double s = 0.0;
    for (const auto& [t, v] : coeffs_) s += tuple_multiplicity(t) * v * v;
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }

  // <f,g> over the full arrays, same multiplicity weighting.
  double inner(const SymTensor& o) const {
    require_same_shape(o);
    const SymTensor* small = this;
    const SymTensor* big = &o;
    if (small->coeffs_.size() > big->coeffs_.size()) std::swap(small, big);
    double s = 0.0;
    for (const auto& [t, v] : small->coeffs_) {
      const auto it = big->coeffs_.find(t);
      if (it != big->coeffs_.end()) s += tuple_multiplicity(t) * v * it->second;
    }
    return s;
  }

  std::vector<double> to_dense() const {
    const std::uint64_t n = dense_size_checked(dim_, order_);
    std::vector<double> dense(n, 0.0);
    for (const auto& [t, v] : coeffs_) {
      IndexTuple perm = t;
      do {
        dense[flat_index(perm)] = v;
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return dense;
  }

  Eigen::MatrixXd to_matrix() const {
    if (order_ != 2) throw std::logic_error("to_matrix: order must be 2");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& [t, v] : coeffs_) {
      m(t[0], t[1]) = v;
      m(t[1], t[0]) = v;
    }
    return m;
  }

  static SymTensor from_matrix(const Eigen::MatrixXd& m, double asym_tol = 1e-12) {
    if (m.rows() != m.cols()) throw std::invalid_argument("not square");
    const int d = static_cast<int>(m.rows());
    SymTensor out(2, d);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        if (std::abs(m(i, j) - m(j, i)) >
            asym_tol * (1.0 + std::abs(m(i, j)))) {
          throw std::invalid_argument("from_matrix: not symmetric");
        }
        out.set({i, j}, 0.5 * (m(i, j) + m(j, i)));
      }
    }
    return out;
  }

  std::uint64_t flat_index(const IndexTuple& idx) const {
    std::uint64_t f = 0;
    for (const int i : idx) {
      f = f * static_cast<std::uint64_t>(dim_) + static_cast<std::uint64_t>(i);
    }
    return f;
  }

 private:
  void canonicalize(IndexTuple& t) const {
    if (static_cast<int>(t.size()) != order_) {
      throw std::invalid_argument("SymTensor: tuple length != order");
    }
    for (const int i : t) {
      if (i < 0 || i >= dim_) throw std::out_of_range("SymTensor: index");
    }
    std::sort(t.begin(), t.end());
  }
  void require_same_shape(const SymTensor& o) const {
    if (o.order_ != order_ || o.dim_ != dim_) {
      throw std::invalid_argument("SymTensor: shape mismatch");
    }
  }

  int order_;
  int dim_;
  std::map<IndexTuple, double> coeffs_;
};

struct RawTensor {
  int order = 0;
  int dim = 1;
  std::vector<double> data;  // row-major, d^order entries

  RawTensor(int order_, int dim_)
      : order(order_), dim(dim_), data(dense_size_checked(dim_, order_), 0.0) {}

  double& at(const IndexTuple& idx) { return data[flat(idx)]; }
  double at(const IndexTuple& idx) const { return data[flat(idx)]; }

  std::uint64_t flat(const IndexTuple& idx) const {
    std::uint64_t f = 0;
    for (const int i : idx) {
      f = f * static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(i);
    }
    return f;
  }
};

inline RawTensor tensor_product(const SymTensor& f, const SymTensor& g) {
  if (f.dim() != g.dim()) throw std::invalid_argument("tensor_product: dim");
  RawTensor out(f.order() + g.order(), f.dim());
  const auto df = f.to_dense();
  const auto dg = g.to_dense();
  for (std::size_t i = 0; i < df.size(); ++i) {
    if (df[i] == 0.0) continue;
    const std::size_t base = i * dg.size();
    for (std::size_t j = 0; j < dg.size(); ++j) out.data[base + j] = df[i] * dg[j];
  }
  return out;
}

// Average of T over all index permutations, stored canonically.
inline SymTensor symmetrize(const RawTensor& T) {
  SymTensor out(T.order, T.dim);
  IndexTuple t(T.order, 0);
  if (T.order == 0) {
    out.set({}, T.data[0]);
    return out;
  }
  do {
    IndexTuple perm = t;
    double sum = 0.0;
    int count = 0;
    do {
      sum += T.at(perm);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (sum != 0.0) out.set(t, sum / count);
  } while (next_canonical_tuple(t, T.dim));
  return out;
}

// Contraction over the last r slots of f against the last r slots of g,
// computed as a (d^{p-r} x d^r) * (d^r x d^{q-r}) product on the dense
// row-major expansions. r=0 reduces to the tensor product, r=p=q to <f,g>.
inline RawTensor contract(const SymTensor& f, const SymTensor& g, int r) {
  if (f.dim() != g.dim()) throw std::invalid_argument("contract: dim");
  const int p = f.order(), q = g.order(), d = f.dim();
  if (r < 0 || r > std::min(p, q)) {
    throw std::invalid_argument("contract: r out of range");
  }
  const auto df = f.to_dense();
  const auto dg = g.to_dense();
  const auto rows = static_cast<Eigen::Index>(dense_size_checked(d, p - r));
  const auto cols = static_cast<Eigen::Index>(dense_size_checked(d, q - r));
  const auto inner = static_cast<Eigen::Index>(dense_size_checked(d, r));
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> A(df.data(), rows, inner);
  Eigen::Map<const RowMat> B(dg.data(), cols, inner);
  RawTensor out(p + q - 2 * r, d);
  Eigen::Map<RowMat> C(out.data.data(), rows, cols);
  C.noalias() = A * B.transpose();
  return out;
}

inline SymTensor contract_sym(const SymTensor& f, const SymTensor& g, int r) {
  return symmetrize(contract(f, g, r));
}

// Largest |eigenvalue| of the order-2 coefficient matrix. Dense spectra up to
// d = 512; beyond that, power iteration on A^2 (always converges to the top
// of the nonnegative spectrum of A^2), relative tolerance 1e-10, 10*d cap.
inline double operator_norm(const SymTensor& A) {
  if (A.order() != 2) throw std::invalid_argument("operator_norm: order != 2");
  const int d = A.dim();
  if (A.coeffs().empty()) return 0.0;
  const Eigen::MatrixXd m = A.to_matrix();
  if (d <= 512) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("operator_norm: eigensolver failed");
    }
    return std::max(std::abs(es.eigenvalues()(0)),
                    std::abs(es.eigenvalues()(d - 1)));
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
  double lambda = 0.0;
  const int cap = 10 * d;
  for (int it = 0; it < cap; ++it) {
    Eigen::VectorXd w = m * (m * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const double next = std::sqrt(nw);
    const bool done = std::abs(next - lambda) <= 1e-10 * std::max(1.0, next);
    lambda = next;
    v = w;
    if (done) break;
  }
  return lambda;
}

// ||A (x)_1 A||^2 over the full arrays = Frobenius^2 of the matrix square
// = sum of fourth powers of the eigenvalues.
inline double contraction_selfnorm_sq(const SymTensor& A) {
  if (A.order() != 2) {
    throw std::invalid_argument("contraction_selfnorm_sq: order != 2");
  }
  const Eigen::MatrixXd m = A.to_matrix();
  return (m * m).squaredNorm();
}

}  // namespace wchaos

#pragma once

// Chunked deterministic Monte Carlo harness. Samples are split into fixed
// chunks of kMcChunk; chunk i draws from the substream (seed, tag, i) and its
// partial moment sums are reduced strictly in chunk order after all workers
// join. The result is a pure function of (n, seed, tag), independent of the
// worker count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "wchaos/rng.hpp"

namespace wchaos {

inline constexpr std::uint64_t kMcChunk = 8192;

struct McStat {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  // Central sample variance of the underlying statistic (not of the mean).
  double sample_variance = 0.0;
  // Raw moment sums, kept so callers can form variance-of-variance bands.
  double sum1 = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;

  // Standard error of the *sample variance* as an estimator, from the
  // asymptotic formula var(S^2) ~ (m4 - var^2)/n with central moments.
  double variance_stderr() const {
    if (n < 2) return 0.0;
    const double m1 = sum1 / n;
    const double m2 = sum2 / n - m1 * m1;
    double c4 = sum4 / n - 4.0 * m1 * (sum3 / n) + 6.0 * m1 * m1 * (sum2 / n) -
                3.0 * m1 * m1 * m1 * m1;
    double v = (c4 - m2 * m2) / n;
    return v > 0.0 ? std::sqrt(v) : 0.0;
  }
};

// per_sample(gen, out) writes one value per tracked statistic into out.
// Returns one McStat per statistic.
template <typename PerSample>
std::vector<McStat> mc_run(std::uint64_t n, std::size_t n_stats,
                           std::uint64_t seed, std::uint64_t tag, int workers,
                           PerSample&& per_sample) {
  if (n == 0) throw std::invalid_argument("mc_run: n must be positive");
  if (n_stats == 0) throw std::invalid_argument("mc_run: no statistics");
  const std::uint64_t n_chunks = (n + kMcChunk - 1) / kMcChunk;

  struct ChunkSums {
    std::uint64_t count = 0;
    // Welford mean and centered second moment; constant samples keep m2 at
    // an exact zero, which the raw power sums cannot do.
    std::vector<double> mean, m2;
    std::vector<double> s1, s2, s3, s4;
  };
  std::vector<ChunkSums> partial(n_chunks);

  auto run_chunk = [&](std::uint64_t ci) {
    const std::uint64_t lo = ci * kMcChunk;
    const std::uint64_t hi = std::min(n, lo + kMcChunk);
    NormalGen gen(seed, tag, ci);
    // Chunks may run on different threads; give each its own functor copy so
    // mutable per-sample scratch state never races.
    auto fn = per_sample;
    ChunkSums cs;
    cs.mean.assign(n_stats, 0.0);
    cs.m2.assign(n_stats, 0.0);
    cs.s1.assign(n_stats, 0.0);
    cs.s2.assign(n_stats, 0.0);
    cs.s3.assign(n_stats, 0.0);
    cs.s4.assign(n_stats, 0.0);
    std::vector<double> vals(n_stats);
    for (std::uint64_t i = lo; i < hi; ++i) {
      fn(gen, vals.data());
      ++cs.count;
      for (std::size_t k = 0; k < n_stats; ++k) {
        const double x = vals[k];
        const double x2 = x * x;
        const double delta = x - cs.mean[k];
        cs.mean[k] += delta / static_cast<double>(cs.count);
        cs.m2[k] += delta * (x - cs.mean[k]);
        cs.s1[k] += x;
        cs.s2[k] += x2;
        cs.s3[k] += x2 * x;
        cs.s4[k] += x2 * x2;
      }
    }
    partial[ci] = std::move(cs);
  };

  if (workers <= 1 || n_chunks == 1) {
    for (std::uint64_t ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::uint64_t ci = next.fetch_add(1);
        if (ci >= n_chunks) return;
        run_chunk(ci);
      }
    };
    const int nw = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), n_chunks));
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<McStat> out(n_stats);
  for (std::size_t k = 0; k < n_stats; ++k) {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    // Chunk-ordered pairwise combination of (count, mean, m2); the result
    // depends only on (n, seed, tag), never on the worker count.
    std::uint64_t cnt = 0;
    double mean = 0.0, m2 = 0.0;
    for (std::uint64_t ci = 0; ci < n_chunks; ++ci) {
      s1 += partial[ci].s1[k];
      s2 += partial[ci].s2[k];
      s3 += partial[ci].s3[k];
      s4 += partial[ci].s4[k];
      const std::uint64_t cb = partial[ci].count;
      if (cb == 0) continue;
      const double delta = partial[ci].mean[k] - mean;
      const double tot = static_cast<double>(cnt + cb);
      mean += delta * (static_cast<double>(cb) / tot);
      m2 += partial[ci].m2[k] +
            delta * delta *
                (static_cast<double>(cnt) * static_cast<double>(cb) / tot);
      cnt += cb;
    }
    McStat st;
    st.n = n;
    st.sum1 = s1;
    st.sum2 = s2;
    st.sum3 = s3;
    st.sum4 = s4;
    st.mean = mean;
    if (n > 1) {
      double var = m2 / static_cast<double>(n - 1);
      if (var < 0.0) var = 0.0;
      st.sample_variance = var;
      st.stderr_ = std::sqrt(var / static_cast<double>(n));
    }
    out[k] = st;
  }
  return out;
}

// Convenience: per-sample statistics that need a d-dimensional Gaussian draw.
// Fills g with i.i.d. standard normals, then calls f(g, out).
template <typename F>
std::vector<McStat> mc_run_gaussian(std::uint64_t n, std::size_t n_stats,
                                    int dim, std::uint64_t seed,
                                    std::uint64_t tag, int workers, F&& f) {
  return mc_run(n, n_stats, seed, tag, workers,
                [f = std::forward<F>(f), dim, buf = std::vector<double>()](
                    NormalGen& gen, double* out) mutable {
                  buf.resize(dim);
                  for (int j = 0; j < dim; ++j) buf[j] = gen();
                  f(buf, out);
                });
}

}  // namespace wchaos

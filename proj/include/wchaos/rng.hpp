#pragma once

// Deterministic random streams. Every Monte Carlo consumer derives its
// generator from (master seed, stream tag, chunk index), so results do not
// depend on thread scheduling or worker count. std::normal_distribution is
// avoided on purpose: its algorithm is implementation-defined and would break
// byte-identical reproducibility across toolchains.

#include <cmath>
#include <cstdint>

namespace wchaos {

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna). State seeded through SplitMix64 so that
// low-entropy seeds still fill all 256 bits.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) {
      sm += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0,1): 53 bits, never returns 0 or 1 after the +0.5 offset
  // of the half-ulp trick is skipped; 0 is possible but harmless downstream
  // except in the polar loop, which rejects it.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Stream addressing: one generator per (seed, tag, chunk). Tags separate
// logically distinct consumers (per-statistic, per-T, per-k) so adding a
// consumer never shifts another one's draws.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag,
                                    std::uint64_t chunk) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(tag));
  h = mix64(h ^ mix64(chunk));
  return h;
}

// Standard normal variates by the Marsaglia polar method (sqrt/log only).
class NormalGen {
 public:
  NormalGen(std::uint64_t seed, std::uint64_t tag, std::uint64_t chunk)
      : rng_(substream_seed(seed, tag, chunk)) {}
  explicit NormalGen(std::uint64_t raw_seed) : rng_(raw_seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * rng_.uniform01() - 1.0;
      v = 2.0 * rng_.uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  double uniform01() { return rng_.uniform01(); }
  std::uint64_t next_u64() { return rng_.next(); }

 private:
  Xoshiro256pp rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace wchaos

// Prints the bound chain for the canonical second-chaos sequence: the
// empirical Wasserstein distance against N(0,1), then the first-order,
// second-order, and contraction bounds that must sit above it. The whole
// column stack shrinks like 1/sqrt(k).
//
// Usage: bound_chain [seed]

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>

#include "wchaos/fourth_moment.hpp"
#include "wchaos/stein.hpp"

using namespace wchaos;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 1;
  const std::uint64_t n = 50000;

  std::cout << "bound chain, n = " << n << ", seed = " << seed << "\n";
  std::cout << std::left << std::setw(14) << "functional" << std::right
            << std::setw(10) << "dw" << std::setw(12) << "first"
            << std::setw(12) << "second" << std::setw(13) << "contraction"
            << "\n";
  for (int k : {1, 2, 4, 8, 16}) {
    const ChaosVector F = ChaosVector::pure(2, canonical_second_chaos(k));
    const auto rows =
        stein_reports("canonical_k" + std::to_string(k), F, n, seed);
    std::cout << std::left << std::setw(14) << rows[0].functional
              << std::right << std::fixed << std::setprecision(4)
              << std::setw(10) << rows[0].dw.value << std::setw(12)
              << rows[0].w.value << std::setw(12) << rows[2].w.value
              << std::setw(13) << rows[3].w.value << "\n";
  }
  return 0;
}

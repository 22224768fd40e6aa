#pragma once

// Reductions with an order that does not depend on the thread count: the
// index range is cut into fixed-size blocks, each block is summed serially,
// and the block partials are added left to right.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace rbc {

inline constexpr std::size_t kReductionBlock = 4096;

template <typename Fn>
double deterministicSum(std::size_t n, Fn&& term) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

inline double deterministicDot(const std::vector<double>& a, const std::vector<double>& b) {
  return deterministicSum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

}  // namespace rbc

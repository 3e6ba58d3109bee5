#pragma once

// k-subsets of {0, ..., n-1} in lexicographic order, with ranking.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace clocksync {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > UINT64_MAX) throw std::overflow_error("binomial coefficient exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

/// Steps `c` (sorted, values < n) to its lexicographic successor.
/// Returns false after the last subset.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline std::vector<std::size_t> first_combination(std::size_t k) {
  std::vector<std::size_t> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = i;
  return c;
}

/// The rank-th k-subset of {0..n-1} in lexicographic order.
inline std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t n, std::size_t k) {
  if (rank >= binomial(n, k)) throw std::out_of_range("combination rank out of range");
  std::vector<std::size_t> c;
  c.reserve(k);
  std::size_t x = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (;; ++x) {
      const std::uint64_t block = binomial(n - x - 1, k - i - 1);
      if (rank < block) break;
      rank -= block;
    }
    c.push_back(x++);
  }
  return c;
}

}  // namespace clocksync

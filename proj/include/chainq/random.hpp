#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

namespace chainq {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (master, a, b), e.g. (seed, trial, purpose).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

/// Uniform integer in [0, bound). Rejection sampling keeps it unbiased and
/// identical across standard libraries (std::uniform_int_distribution is not).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Uniform integer in [lo, hi].
inline std::uint64_t uniform_between(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + uniform_below(rng, hi - lo + 1);
}

/// `count` distinct values from [0, n), ascending (Floyd's algorithm).
inline std::vector<std::uint64_t> sample_distinct(Rng& rng, std::uint64_t count, std::uint64_t n) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t j = n - count; j < n; ++j) {
    const std::uint64_t t = uniform_below(rng, j + 1);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// `parts` disjoint intervals of the given lengths placed uniformly at random
/// in [0, n). Returns interval starts in ascending order. Requires
/// Σ lengths <= n.
inline std::vector<std::uint64_t> place_disjoint(Rng& rng, const std::vector<std::uint64_t>& lengths, std::uint64_t n) {
  std::uint64_t total = 0;
  for (auto l : lengths) total += l;
  const std::uint64_t slack = n - total;
  // Sorted offsets in [0, slack] with repetition = uniform placement of the
  // free space between the intervals.
  std::vector<std::uint64_t> offsets(lengths.size());
  for (auto& o : offsets) o = uniform_below(rng, slack + 1);
  std::sort(offsets.begin(), offsets.end());
  std::vector<std::uint64_t> starts(lengths.size());
  std::uint64_t used = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    starts[i] = offsets[i] + used;
    used += lengths[i];
  }
  return starts;
}

}  // namespace chainq

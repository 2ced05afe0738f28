#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gelkit {

/// SplitMix64 finalizer applied to `seed` advanced by `stream + 1` golden-ratio
/// increments. Used to derive independent child seeds from a master seed.
constexpr std::uint64_t splitmix(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Unbiased draw from [0, bound) by rejection; independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<long> seeded_permutation(long n, std::uint64_t seed) {
  std::vector<long> perm(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (long i = n - 1; i > 0; --i) {
    const auto j = static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

}  // namespace gelkit

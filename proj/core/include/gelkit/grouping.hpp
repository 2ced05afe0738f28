#pragma once

#include "gelkit/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gelkit {

/// Seeded partition of N observation indices into n groups whose sizes differ
/// by at most one.
struct Grouping {
  Index N = 0;
  Index n = 0;
  std::uint64_t seed = 0;
  std::vector<Index> assignment;  // group id of each observation
  std::vector<Index> sizes;       // d_i
  std::vector<Index> order;       // observation indices, grouped contiguously
  std::vector<Index> offsets;     // group i is order[offsets[i] .. offsets[i+1])

  std::span<const Index> members(Index group) const {
    const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(group)]);
    const auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(group) + 1]);
    return std::span<const Index>(order).subspan(b, e - b);
  }

  /// N / n.
  double mean_group_size() const { return static_cast<double>(N) / static_cast<double>(n); }
};

/// Fisher-Yates shuffle of 0..N-1 seeded with `seed`; the first N mod n groups
/// take ceil(N/n) consecutive shuffled indices, the rest floor(N/n).
Grouping make_grouping(Index N, Index n, std::uint64_t seed);

/// n = N with observation i alone in group i (no shuffle).
Grouping singleton_grouping(Index N);

}  // namespace gelkit

#include "gelkit/grouping.hpp"

#include "gelkit/errors.hpp"
#include "gelkit/random.hpp"

#include <sstream>

namespace gelkit {

namespace {

Grouping assemble(Index N, Index n, std::uint64_t seed, std::vector<Index> order) {
  Grouping g;
  g.N = N;
  g.n = n;
  g.seed = seed;
  g.order = std::move(order);
  g.sizes.resize(static_cast<std::size_t>(n));
  g.offsets.resize(static_cast<std::size_t>(n) + 1);
  g.assignment.resize(static_cast<std::size_t>(N));
  const Index base = N / n;
  const Index extra = N % n;
  Index pos = 0;
  for (Index i = 0; i < n; ++i) {
    const Index size = base + (i < extra ? 1 : 0);
    g.sizes[static_cast<std::size_t>(i)] = size;
    g.offsets[static_cast<std::size_t>(i)] = pos;
    for (Index k = 0; k < size; ++k) {
      g.assignment[static_cast<std::size_t>(g.order[static_cast<std::size_t>(pos + k)])] = i;
    }
    pos += size;
  }
  g.offsets[static_cast<std::size_t>(n)] = pos;
  return g;
}

}  // namespace

Grouping make_grouping(Index N, Index n, std::uint64_t seed) {
  if (n < 1 || n > N) {
    std::ostringstream os;
    os << "make_grouping: need 1 <= n <= N (got N = " << N << ", n = " << n << ")";
    throw ArgumentError(os.str());
  }
  const auto perm = seeded_permutation(static_cast<long>(N), seed);
  return assemble(N, n, seed, std::vector<Index>(perm.begin(), perm.end()));
}

Grouping singleton_grouping(Index N) {
  if (N < 1) throw ArgumentError("singleton_grouping: N must be positive");
  std::vector<Index> order(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
  return assemble(N, N, 0, std::move(order));
}

}  // namespace gelkit

#pragma once

#include "gelkit/gel.hpp"
#include "gelkit/moment_models.hpp"
#include "gelkit/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gelkit {

struct Shard {
  Index shard_id = 0;
  DataMatrix data;
  Index n = 0;  // groups on this shard
  std::uint64_t seed = 0;

  Grouping grouping() const;
};

/// Seeded random permutation of the rows split into K contiguous shards with
/// sizes differing by at most one (K = 1 keeps the original row order). Shard
/// k groups its rows into min(n_per_shard, N_k) groups with seed
/// splitmix(master_seed, k).
std::vector<Shard> partition_shards(const DataMatrix& data, Index K, std::uint64_t master_seed,
                                    Index n_per_shard = 100);

struct DgelOptions {
  GelOptions gel{};
  /// Fail if any shard fails; otherwise average the survivors with a warning.
  bool strict = true;
  /// Weight local estimates by N_k instead of equally.
  bool size_weighted = false;
  /// Worker-pool width; 0 means default_threads().
  int threads = 0;
};

struct DgelFit {
  Vector theta_dgel;
  std::vector<Index> shard_ids;  // ascending; aligned with local_fits / local_tests
  std::vector<GelFit> local_fits;
  std::vector<TestResult> local_tests;
  std::vector<Index> failed_shards;
  std::vector<std::string> warnings;
  double agg_neg2logR = 0;  // (1/K) sum_k of the per-shard log-ratio statistics
  double statistic = 0;
  int df = 0;
  double p_value = 1;
  double m_bar = 1;
  bool infeasible = false;
  std::string calibration = "sum_chisq";
};

/// Local GEL fits averaged in shard_id order.
DgelFit dgel_estimate(const std::vector<Shard>& shards, const MomentModel& model, const DgelOptions& opts = {});

/// Aggregated test of theta = theta0: the per-shard statistics are summed and
/// referred to chi-square with K times the per-shard degrees of freedom.
/// Requires equal mean group sizes across shards (within 1%).
DgelFit dgel_test(const std::vector<Shard>& shards, const MomentModel& model, const Vector& theta0,
                  const DgelOptions& opts = {});

}  // namespace gelkit

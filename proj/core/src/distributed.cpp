#include "gelkit/distributed.hpp"

#include "gelkit/chisq.hpp"
#include "gelkit/errors.hpp"
#include "gelkit/parallel.hpp"
#include "gelkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>

namespace gelkit {

Grouping Shard::grouping() const { return make_grouping(data.rows(), n, seed); }

std::vector<Shard> partition_shards(const DataMatrix& data, Index K, std::uint64_t master_seed,
                                    Index n_per_shard) {
  const Index N = data.rows();
  if (K < 1) throw ArgumentError("partition_shards: K must be >= 1");
  if (N < K) throw ArgumentError("partition_shards: need N >= K");
  if (n_per_shard < 1) throw ArgumentError("partition_shards: groups per shard must be >= 1");
  std::vector<Shard> shards(static_cast<std::size_t>(K));
  std::vector<long> perm;
  if (K > 1) perm = seeded_permutation(N, master_seed);
  const Index base = N / K;
  const Index extra = N % K;
  Index offset = 0;
  for (Index k = 0; k < K; ++k) {
    Shard& s = shards[static_cast<std::size_t>(k)];
    const Index size = base + (k < extra ? 1 : 0);
    s.shard_id = k;
    s.seed = splitmix(master_seed, static_cast<std::uint64_t>(k));
    s.n = std::min(n_per_shard, size);
    if (K == 1) {
      s.data = data;
    } else {
      s.data.resize(size, data.cols());
      for (Index i = 0; i < size; ++i) s.data.row(i) = data.row(perm[static_cast<std::size_t>(offset + i)]);
    }
    offset += size;
  }
  return shards;
}

namespace {

std::vector<const Shard*> sorted_shards(const std::vector<Shard>& shards) {
  if (shards.empty()) throw ArgumentError("DGEL: no shards");
  std::vector<const Shard*> out;
  out.reserve(shards.size());
  for (const auto& s : shards) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](const Shard* a, const Shard* b) { return a->shard_id < b->shard_id; });
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (out[k]->shard_id == out[k - 1]->shard_id) throw ArgumentError("DGEL: duplicate shard_id");
  }
  return out;
}

int pool_width(const DgelOptions& opts) { return opts.threads > 0 ? opts.threads : default_threads(); }

std::string shard_error(Index id, const std::exception& e) {
  return "shard " + std::to_string(id) + ": " + e.what();
}

}  // namespace

DgelFit dgel_estimate(const std::vector<Shard>& shards, const MomentModel& model, const DgelOptions& opts) {
  const auto order = sorted_shards(shards);
  const auto K = static_cast<long>(order.size());
  std::vector<std::optional<GelFit>> fits(static_cast<std::size_t>(K));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(K));
  parallel_for(K, pool_width(opts), [&](long k) {
    const Shard& s = *order[static_cast<std::size_t>(k)];
    try {
      if (s.n > s.data.rows()) throw ArgumentError("shard has more groups than rows");
      fits[static_cast<std::size_t>(k)] = gel_estimate(s.data, s.grouping(), model, std::nullopt, opts.gel);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  });

  DgelFit out;
  Vector sum = Vector::Zero(model.param_dim());
  double weight_sum = 0.0;
  for (long k = 0; k < K; ++k) {
    const Shard& s = *order[static_cast<std::size_t>(k)];
    if (errors[static_cast<std::size_t>(k)]) {
      try {
        std::rethrow_exception(errors[static_cast<std::size_t>(k)]);
      } catch (const InfeasibleError& e) {
        if (opts.strict) throw InfeasibleError(shard_error(s.shard_id, e));
        out.warnings.push_back(shard_error(s.shard_id, e));
      } catch (const NonConvergence& e) {
        if (opts.strict) throw NonConvergence(shard_error(s.shard_id, e));
        out.warnings.push_back(shard_error(s.shard_id, e));
      } catch (const Error& e) {
        if (opts.strict) throw;
        out.warnings.push_back(shard_error(s.shard_id, e));
      }
      out.failed_shards.push_back(s.shard_id);
      continue;
    }
    const GelFit& f = *fits[static_cast<std::size_t>(k)];
    const double w = opts.size_weighted ? static_cast<double>(s.data.rows()) : 1.0;
    sum += w * f.theta_hat;
    weight_sum += w;
    out.shard_ids.push_back(s.shard_id);
    out.local_fits.push_back(f);
  }
  if (out.local_fits.empty()) throw NonConvergence("DGEL: every shard failed");
  out.theta_dgel = sum / weight_sum;
  return out;
}

DgelFit dgel_test(const std::vector<Shard>& shards, const MomentModel& model, const Vector& theta0,
                  const DgelOptions& opts) {
  const auto order = sorted_shards(shards);
  const auto K = static_cast<long>(order.size());
  const double m0 = order.front()->data.rows() / static_cast<double>(order.front()->n);
  for (const Shard* s : order) {
    const double mk = s->data.rows() / static_cast<double>(s->n);
    if (std::abs(mk - m0) > 0.01 * m0) {
      throw ArgumentError("DGEL test: mean group sizes differ across shards; no mixed-m statistic is defined");
    }
  }
  std::vector<TestResult> tests(static_cast<std::size_t>(K));
  std::vector<std::optional<GelFit>> fits(static_cast<std::size_t>(K));
  parallel_for(K, pool_width(opts), [&](long k) {
    const Shard& s = *order[static_cast<std::size_t>(k)];
    const Grouping g = s.grouping();
    std::optional<GelFit> fit;
    try {
      fit = gel_estimate(s.data, g, model, std::nullopt, opts.gel);
    } catch (const InfeasibleError&) {
      // The test at theta0 may still be evaluated; the profile minimum is unknown.
    }
    if (!fit) {
      // Only an infeasible theta0 gives a defined outcome here; otherwise this rethrows.
      tests[static_cast<std::size_t>(k)] = gel_test(s.data, g, model, theta0, opts.gel);
      return;
    }
    tests[static_cast<std::size_t>(k)] =
        gel_test(s.data, g, model, theta0, opts.gel, TestCalibration::profile, &*fit);
    fits[static_cast<std::size_t>(k)] = std::move(fit);
  });

  DgelFit out;
  double stat = 0.0;
  double agg = 0.0;
  int df = 0;
  for (long k = 0; k < K; ++k) {
    const TestResult& t = tests[static_cast<std::size_t>(k)];
    out.shard_ids.push_back(order[static_cast<std::size_t>(k)]->shard_id);
    out.local_tests.push_back(t);
    if (fits[static_cast<std::size_t>(k)]) out.local_fits.push_back(*fits[static_cast<std::size_t>(k)]);
    if (t.infeasible) out.infeasible = true;
    stat += t.statistic;
    agg += t.statistic * t.m_bar;
    df += t.df;
  }
  out.m_bar = m0;
  out.df = df;
  out.agg_neg2logR = agg / static_cast<double>(K);
  if (out.infeasible) {
    out.statistic = std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
  } else {
    out.statistic = stat;
    out.p_value = chisq_sf(stat, df);
  }
  if (!out.local_fits.empty() && out.local_fits.size() == static_cast<std::size_t>(K)) {
    Vector sum = Vector::Zero(model.param_dim());
    for (const auto& f : out.local_fits) sum += f.theta_hat;
    out.theta_dgel = sum / static_cast<double>(K);
  }
  return out;
}

}  // namespace gelkit

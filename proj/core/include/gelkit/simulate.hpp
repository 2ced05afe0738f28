#pragma once

#include "gelkit/gel.hpp"
#include "gelkit/moment_models.hpp"
#include "gelkit/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gelkit {

/// N iid draws from N(mu, sigma^2), one column.
DataMatrix gen_example1(Index N, double mu, double sigma, std::uint64_t seed);

/// Rows (y, x_1..x_p): x ~ N(0, (1-rho) I + rho 11'), eps | x ~ N(0, 1 + alpha (1'x / sqrt p)^2),
/// y = beta0 + x'beta + eps. ArgumentError if the covariance is not positive definite.
DataMatrix gen_example2(Index N, Index p, double rho, double alpha, double beta0, const Vector& beta,
                        std::uint64_t seed);

struct TwoSamples {
  DataMatrix x;
  DataMatrix y;
};

/// Equal-weight three-component normal mixtures; the second parameter of each
/// component is a variance. X uses splitmix(seed, 0), Y uses splitmix(seed, 1),
/// and the third Y component is shifted by 20 j.
TwoSamples gen_example3(Index N1, Index N2, int j, std::uint64_t seed);

/// Average of classical EL fits on k seeded, near-equal blocks.
Vector dcel_estimate(const DataMatrix& data, Index k, const MomentModel& model, std::uint64_t seed,
                     const GelOptions& opts = {});

struct WelchResult {
  double statistic = 0;
  double df = 0;
  double p_value = 1;
};

/// Welch two-sample t-test of equal means on the first column.
WelchResult welch_t_test(const DataMatrix& x, const DataMatrix& y);

struct MethodSpec {
  std::string name;  // EL, GEL, DCEL, DGEL, WT
  Index n = 100;     // GEL groups, DGEL groups per shard
  Index k = 10;      // DCEL blocks
  Index K = 10;      // DGEL shards
  Index m = 100;     // two-sample group size
  bool two_sample = false;

  std::string label() const;
};

struct SimConfig {
  std::string study = "mse";  // mse, size_power, timing
  std::string example = "ex1";
  Index N = 10000;
  Index N1 = 3000;
  Index N2 = 3000;
  std::vector<Index> N_grid;
  int replications = 100;
  std::vector<MethodSpec> methods;
  std::uint64_t master_seed = 1;
  double alpha = 0.05;
  std::vector<int> grid;  // Example 3 shift index j
  int threads = 0;
  double mu = 0.0;
  double sigma = 2.0;
  Index p = 5;
  double rho = 0.2;
  double het = 1.0;
  double beta0 = 1.0;
};

/// Strict parsing: unknown keys, unknown methods and invalid values raise
/// ArgumentError.
SimConfig parse_sim_config(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& cfg);

struct MethodSummary {
  std::string method;
  std::string label;
  Index N = 0;
  int grid = -1;
  int reps_ok = 0;
  int failures = 0;
  Vector mse;
  Vector mse_sd;
  Vector cov_diag_mean;  // mean plug-in diag(V) where available
  double time_mean_s = 0;
  double time_median_s = 0;
  double reject_rate = -1;
  double reject_se = -1;
};

struct SimReport {
  std::string study;
  std::string example;
  std::vector<MethodSummary> rows;
  std::map<std::string, double> loglog_slopes;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Per replication: one dataset shared by every method, squared errors
/// against the generating parameters, wall-clock around each fit.
SimReport run_mse_study(const SimConfig& cfg);

/// Rejection rates at level alpha: Example 1 tests the true theta; Example 3
/// tests equal means for every j in the grid.
SimReport run_size_power_study(const SimConfig& cfg);

/// Median wall-clock per method and N, single-threaded.
SimReport run_timing_bench(const SimConfig& cfg);

SimReport run_study(const SimConfig& cfg);

}  // namespace gelkit

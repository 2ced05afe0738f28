// Monte Carlo checks; slow.

#include <gelkit/gel.hpp>
#include <gelkit/random.hpp>
#include <gelkit/simulate.hpp>
#include <gelkit/two_sample.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

using namespace gelkit;
using nlohmann::json;

TEST(Statistical, GelAndElMseAgreeOnExample1) {
  const json cfg = {{"study", "mse"},
                    {"example", "ex1"},
                    {"N", 10000},
                    {"replications", 200},
                    {"master_seed", 12},
                    {"methods", {{{"name", "GEL"}, {"n", 100}}, {{"name", "EL"}}}}};
  const SimReport r = run_study(parse_sim_config(cfg));
  const double ratio = r.rows[0].mse[0] / r.rows[1].mse[0];
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.25);
}

TEST(Statistical, ProfileIntervalCoverage) {
  const auto model = normal_three_moment_model();
  int covered = 0;
  const int reps = 500;
  for (int rep = 0; rep < reps; ++rep) {
    const std::uint64_t seed = splitmix(21, static_cast<std::uint64_t>(rep));
    const DataMatrix d = gen_example1(10000, 0.0, 2.0, seed);
    const Grouping g = make_grouping(10000, 100, splitmix(seed, 1));
    const GelFit f = gel_estimate(d, g, *model);
    const auto [lo, hi] = confidence_interval(d, g, *model, f, 0, 0.95);
    covered += lo <= 0.0 && 0.0 <= hi;
  }
  const double rate = static_cast<double>(covered) / reps;
  EXPECT_GE(rate, 0.93);
  EXPECT_LE(rate, 0.97);
}

TEST(Statistical, IntervalWidthShrinksAtRootN) {
  const auto model = normal_three_moment_model();
  double ratio_sum = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const std::uint64_t seed = splitmix(22, static_cast<std::uint64_t>(rep));
    const DataMatrix big = gen_example1(40000, 0.0, 2.0, seed);
    const DataMatrix small = big.topRows(10000);
    const Grouping gb = make_grouping(40000, 100, 1);
    const Grouping gs = make_grouping(10000, 100, 1);
    const auto [lb, hb] = confidence_interval(big, gb, *model, gel_estimate(big, gb, *model), 0, 0.95);
    const auto [ls, hs] = confidence_interval(small, gs, *model, gel_estimate(small, gs, *model), 0, 0.95);
    ratio_sum += (hb - lb) / (hs - ls);
  }
  const double ratio = ratio_sum / reps;
  EXPECT_GE(ratio, 0.4);
  EXPECT_LE(ratio, 0.6);
}

TEST(Statistical, TwoSamplePValuesRoughlyUniformUnderNull) {
  std::vector<double> p;
  for (int rep = 0; rep < 300; ++rep) {
    const std::uint64_t seed = splitmix(23, static_cast<std::uint64_t>(rep));
    const auto s = gen_example3(3000, 3000, 0, seed);
    p.push_back(two_sample_mean_test(s.x, s.y, 100, Vector::Zero(1), splitmix(seed, 7)).p_value);
  }
  std::sort(p.begin(), p.end());
  double ks = 0;
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    ks = std::max({ks, std::abs(p[i] - static_cast<double>(i) / n), std::abs(p[i] - static_cast<double>(i + 1) / n)});
  }
  // 1% critical value of the Kolmogorov distance is about 1.63 / sqrt(n).
  EXPECT_LE(ks, 1.63 / std::sqrt(n));
}

TEST(Statistical, ConstrainedRegressionBeatsUnconstrained) {
  const json cfg = {{"study", "mse"},
                    {"example", "ex2"},
                    {"N", 5000},
                    {"replications", 60},
                    {"master_seed", 24},
                    {"methods", {{{"name", "GEL"}, {"n", 100}}, {{"name", "DCEL"}, {"k", 5}}}}};
  const SimReport r = run_study(parse_sim_config(cfg));
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.failures, 0) << row.label;
    EXPECT_LT(row.mse.maxCoeff(), 0.05) << row.label;
  }
}

#include <gelkit/errors.hpp>
#include <gelkit/random.hpp>
#include <gelkit/simulate.hpp>
#include <gelkit/two_sample.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gelkit;

namespace {

DataMatrix column(const std::vector<double>& v) {
  DataMatrix d(static_cast<Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) d(static_cast<Index>(i), 0) = v[i];
  return d;
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST(TwoSample, IdenticalSamplesAtZeroShift) {
  const DataMatrix x = gen_example1(400, 0.0, 1.0, 1);
  const auto fit = two_sample_mean_test(x, x, 20, scalar(0.0), 3);
  EXPECT_FALSE(fit.infeasible);
  EXPECT_NEAR(fit.statistic, 0.0, 1e-10);
  EXPECT_NEAR(fit.p_value, 1.0, 1e-6);
}

TEST(TwoSample, MatchesBruteForceOnTinyInstances) {
  Rng rng(31);
  std::normal_distribution<double> z(0.0, 1.0);
  int checked = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto n1 = 3 + static_cast<std::size_t>(uniform_below(rng, 4));
    const auto n2 = 3 + static_cast<std::size_t>(uniform_below(rng, 4));
    std::vector<double> x(n1), y(n2);
    for (auto& v : x) v = z(rng);
    for (auto& v : y) v = 0.3 + 1.5 * z(rng);
    const double pi0 = 0.2 * z(rng);
    const double ref = oracle::two_sample_brute(x, y, pi0);
    if (!std::isfinite(ref)) continue;
    const auto fit = two_sample_mean_test(column(x), column(y), 1, scalar(pi0));
    ASSERT_FALSE(fit.infeasible) << rep;
    EXPECT_NEAR(fit.neg2logR, ref, 1e-6) << "rep " << rep;
    ++checked;
  }
  EXPECT_GE(checked, 8);
}

TEST(TwoSample, SwapSymmetry) {
  const auto s = gen_example3(600, 600, 2, 4);
  const auto pa = make_two_sample_problem(s.x, s.y, mean_model(1), 1, 0);
  const auto pb = make_two_sample_problem(s.y, s.x, mean_model(1), 1, 0);
  const auto fa = two_sample_test(pa, scalar(5.0));
  const auto fb = two_sample_test(pb, scalar(-5.0));
  EXPECT_NEAR(fa.neg2logR, fb.neg2logR, 1e-8 * std::max(1.0, fa.neg2logR));
}

TEST(TwoSample, SystemResidualsVanish) {
  const auto s = gen_example3(1000, 1000, 0, 5);
  const auto prob = make_two_sample_problem(s.x, s.y, mean_model(1), 50, 6);
  const auto fit = solve_two_sample_system(prob, scalar(0.0));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.theta_y_star[0] - fit.theta_x_star[0], 0.0, 1e-12);
  // Each sample's multiplier equation holds at the common lambda.
  const double t1 = prob.tau1();
  const double t2 = prob.tau2();
  const double lam = fit.lambda_star[0];
  double fx = 0, fy = 0;
  for (Index i = 0; i < prob.n1(); ++i) {
    double gb = 0;
    for (Index o : prob.gx.members(i)) gb += prob.X(o, 0) - fit.theta_x_star[0];
    gb /= static_cast<double>(prob.gx.members(i).size());
    fx += gb / (1 - t1 * lam * gb);
  }
  for (Index i = 0; i < prob.n2(); ++i) {
    double gb = 0;
    for (Index o : prob.gy.members(i)) gb += prob.Y(o, 0) - fit.theta_y_star[0];
    gb /= static_cast<double>(prob.gy.members(i).size());
    fy += gb / (1 + t2 * lam * gb);
  }
  EXPECT_LE(std::abs(fx) / static_cast<double>(prob.n1()), 1e-9);
  EXPECT_LE(std::abs(fy) / static_cast<double>(prob.n2()), 1e-9);
  EXPECT_GE(fit.neg2logR, 0.0);
}

TEST(TwoSample, DivisibilityAndTrim) {
  const DataMatrix x = gen_example1(105, 0, 1, 1);
  const DataMatrix y = gen_example1(98, 0, 1, 2);
  EXPECT_THROW(make_two_sample_problem(x, y, mean_model(1), 10, 0), ArgumentError);
  const auto p = make_two_sample_problem(x, y, mean_model(1), 10, 0, true);
  EXPECT_EQ(p.trimmed_x, 5);
  EXPECT_EQ(p.trimmed_y, 8);
  EXPECT_EQ(p.n1(), 10);
  EXPECT_EQ(p.n2(), 9);
}

TEST(TwoSample, RejectsOverIdentifiedModel) {
  const DataMatrix x = gen_example1(100, 0, 1, 1);
  EXPECT_THROW(make_two_sample_problem(x, x, normal_three_moment_model(), 10, 0), ArgumentError);
}

TEST(TwoSample, DisjointSupportIsFlaggedInfeasible) {
  const DataMatrix x = column({0, 1, 2, 3});
  const DataMatrix y = column({100, 101, 102, 103});
  const auto fit = two_sample_mean_test(x, y, 1, scalar(0.0));
  EXPECT_TRUE(fit.infeasible);
  EXPECT_EQ(fit.p_value, 0.0);
}

TEST(TwoSample, DetectsLargeShift) {
  const auto s = gen_example3(3000, 3000, 10, 8);
  const auto fit = two_sample_mean_test(s.x, s.y, 100, scalar(0.0), 1);
  EXPECT_LT(fit.p_value, 0.05);
  EXPECT_EQ(fit.df, 1);
}

TEST(Welch, KnownValues) {
  const DataMatrix x = column({1, 2, 3, 4, 5});
  const DataMatrix y = column({2, 4, 6, 8, 10, 12});
  const auto w = welch_t_test(x, y);
  // Hand computation: means 3 and 7, variances 2.5 and 14.
  const double se = std::sqrt(2.5 / 5 + 14.0 / 6);
  EXPECT_NEAR(w.statistic, (3.0 - 7.0) / se, 1e-12);
  const double a = 2.5 / 5, b = 14.0 / 6;
  EXPECT_NEAR(w.df, (a + b) * (a + b) / (a * a / 4 + b * b / 5), 1e-10);
  EXPECT_GT(w.p_value, 0.0);
  EXPECT_LT(w.p_value, 0.1);
}

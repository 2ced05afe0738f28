#include <gelkit/errors.hpp>
#include <gelkit/gel.hpp>
#include <gelkit/random.hpp>
#include <gelkit/simulate.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gelkit;

namespace {

DataMatrix column(std::initializer_list<double> v) {
  DataMatrix d(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) d(i++, 0) = x;
  return d;
}

// Contiguous groups of the given sizes, in data order.
Grouping explicit_grouping(const std::vector<Index>& sizes) {
  Grouping g;
  g.n = static_cast<Index>(sizes.size());
  g.sizes = sizes;
  g.offsets.push_back(0);
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (Index j = 0; j < sizes[k]; ++j) {
      g.order.push_back(g.N);
      g.assignment.push_back(static_cast<Index>(k));
      ++g.N;
    }
    g.offsets.push_back(g.N);
  }
  return g;
}

Vector scalar(double v) { return Vector::Constant(1, v); }

DataMatrix ex1(Index N, std::uint64_t seed) { return gen_example1(N, 0.0, 2.0, seed); }

DataMatrix ex2(Index N, std::uint64_t seed) {
  Vector beta(5);
  beta << 1, 2, 3, 4, 5;
  return gen_example2(N, 5, 0.5, 0.3, 1.0, beta, seed);
}

}  // namespace

TEST(GroupMeans, SingletonsAreRawMoments) {
  const DataMatrix d = ex1(50, 1);
  const auto m = normal_three_moment_model();
  const Vector th = Vector::Map(std::vector<double>{0.1, 1.9}.data(), 2);
  const auto gm = group_moment_averages(d, singleton_grouping(50), *m, th);
  for (Index i = 0; i < 50; ++i) {
    EXPECT_EQ(gm.gbar.row(i).transpose(), m->eval_moment({d.row(i).data(), 1}, th));
  }
}

TEST(GroupMeans, WeightedRecombinationIsFullSampleMean) {
  const DataMatrix d = ex1(1003, 2);
  const auto m = normal_three_moment_model();
  Vector th(2);
  th << 0.2, 2.1;
  const auto gm = group_moment_averages(d, make_grouping(1003, 37, 5), *m, th);
  Vector full = Vector::Zero(3);
  for (Index i = 0; i < d.rows(); ++i) full += m->eval_moment({d.row(i).data(), 1}, th);
  full /= static_cast<double>(d.rows());
  const Vector rec = gm.gbar.transpose() * gm.group_weights;
  EXPECT_LE((rec - full).norm() / full.norm(), 1e-12);
}

TEST(LogRatio, TwoGroupFixture) {
  const DataMatrix d = column({1, 2, 3, 4});
  const auto lr = gel_log_ratio(d, explicit_grouping({2, 2}), *mean_model(1), scalar(2.0));
  EXPECT_NEAR(lr.dual.lambda[0], 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(lr.neg2logR, 4.0 * std::log(4.0 / 3.0), 1e-10);
}

TEST(LogRatio, ZeroAtGrandMean) {
  const DataMatrix d = ex1(200, 3);
  const auto lr = gel_log_ratio(d, make_grouping(200, 20, 1), *mean_model(1), scalar(d.col(0).mean()));
  EXPECT_NEAR(lr.neg2logR, 0.0, 1e-20);
  EXPECT_NEAR(lr.dual.lambda[0], 0.0, 1e-12);
}

TEST(LogRatio, SingletonGroupingEqualsClassicalEl) {
  const DataMatrix d = ex1(300, 4);
  const auto m = mean_model(1);
  std::vector<double> x(d.data(), d.data() + d.rows());
  for (double t : {-0.3, -0.05, 0.0, 0.1, 0.25}) {
    const double gel = gel_log_ratio(d, singleton_grouping(300), *m, scalar(t)).neg2logR;
    const double el = el_log_ratio(d, *m, scalar(t)).neg2logR;
    EXPECT_NEAR(gel, el, 1e-10);
    EXPECT_NEAR(el, oracle::el_mean_neg2logR(x, t), 1e-8);
  }
}

TEST(LogRatio, InfeasibleOutsideHull) {
  const DataMatrix d = column({1, 2, 3, 4});
  EXPECT_THROW(gel_log_ratio(d, explicit_grouping({2, 2}), *mean_model(1), scalar(5.0)), InfeasibleError);
}

TEST(LogRatio, NonNegative) {
  const DataMatrix d = ex1(400, 5);
  const auto m = normal_three_moment_model();
  const Grouping g = make_grouping(400, 40, 1);
  Rng rng(6);
  std::uniform_real_distribution<double> mu(-0.5, 0.5), sg(1.5, 2.5);
  for (int k = 0; k < 50; ++k) {
    Vector th(2);
    th << mu(rng), sg(rng);
    try {
      EXPECT_GE(gel_log_ratio(d, g, *m, th).neg2logR, -1e-12);
    } catch (const InfeasibleError&) {
    }
  }
}

TEST(ProfileGradient, TwoGroupFixture) {
  const DataMatrix d = column({1, 2, 3, 4});
  const Grouping g = explicit_grouping({2, 2});
  const auto m = mean_model(1);
  const auto lr = gel_log_ratio(d, g, *m, scalar(2.0));
  EXPECT_NEAR(profile_gradient(d, g, *m, scalar(2.0), lr.dual)[0], -16.0 / 3.0, 1e-9);
  const double h = 1e-5;
  const double fd = (gel_log_ratio(d, g, *m, scalar(2.0 + h)).neg2logR -
                     gel_log_ratio(d, g, *m, scalar(2.0 - h)).neg2logR) / (2 * h);
  EXPECT_NEAR(fd, -16.0 / 3.0, 1e-6);
}

TEST(ProfileGradient, MatchesFiniteDifferencesOnExample1) {
  const DataMatrix d = ex1(10000, 7);
  const auto m = normal_three_moment_model();
  const Grouping g = make_grouping(10000, 100, 1);
  const GelFit fit = gel_estimate(d, g, *m);
  Rng rng(8);
  std::normal_distribution<double> z(0.0, 0.02);
  for (int k = 0; k < 10; ++k) {
    Vector th = fit.theta_hat;
    th[0] += z(rng);
    th[1] += z(rng);
    const auto lr = gel_log_ratio(d, g, *m, th);
    const Vector an = profile_gradient(d, g, *m, th, lr.dual);
    const Vector fd = oracle::fd_jacobian(
        [&](const Vector& t) { return Vector::Constant(1, gel_log_ratio(d, g, *m, t).neg2logR); }, th)
                          .transpose();
    EXPECT_LE((an - fd).norm() / std::max(1e-8, fd.norm()), 1e-4) << "k=" << k;
  }
}

TEST(Estimate, MeanModelIsGrandMeanForAnyGrouping) {
  const DataMatrix d = ex1(1000, 9);
  const double mean = d.col(0).mean();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GelFit f = gel_estimate(d, make_grouping(1000, 30, seed), *mean_model(1));
    EXPECT_NEAR(f.theta_hat[0], mean, 1e-10);
    EXPECT_NEAR(f.lambda_hat[0], 0.0, 1e-10);
    EXPECT_LE((f.q_hat.array() - 1.0 / 1000).abs().maxCoeff(), 1e-10);
    EXPECT_NEAR(f.neg2logR_at_hat, 0.0, 1e-12);
    EXPECT_TRUE(f.just_identified);
  }
}

TEST(Estimate, UnconstrainedRegressionIsOls) {
  const DataMatrix d = ex2(2000, 11);
  const auto m = linreg_model(5);
  const Vector ols = oracle::ols_qr(d);
  Vector first;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GelFit f = gel_estimate(d, make_grouping(2000, 100, seed), *m);
    EXPECT_LE((f.theta_hat - ols).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(f.lambda_hat.cwiseAbs().maxCoeff(), 1e-10);
    if (seed == 0) first = f.theta_hat;
    EXPECT_LE((f.theta_hat - first).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Estimate, ReductionIdentityWithClassicalEl) {
  const auto m = normal_three_moment_model();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DataMatrix d = ex1(200 + 50 * static_cast<Index>(s), 100 + s);
    const GelFit g = gel_estimate(d, singleton_grouping(d.rows()), *m);
    const GelFit e = el_estimate(d, *m);
    EXPECT_LE((g.theta_hat - e.theta_hat).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((g.lambda_hat - e.lambda_hat).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(g.neg2logR_at_hat, e.neg2logR_at_hat, 1e-10);
  }
}

TEST(Estimate, WeightIdentitiesAndOptimality) {
  const DataMatrix d = ex1(5000, 12);
  const auto m = normal_three_moment_model();
  const Grouping g = make_grouping(5000, 50, 2);
  const GelFit f = gel_estimate(d, g, *m);
  ASSERT_TRUE(f.converged);
  EXPECT_TRUE((f.q_hat.array() > 0).all());
  // q is per observation: sum over groups of d_i q_i.
  double total = 0;
  Vector constraint = Vector::Zero(3);
  for (Index i = 0; i < g.n; ++i) {
    const double q = f.q_hat[i];
    total += static_cast<double>(g.sizes[static_cast<std::size_t>(i)]) * q;
    for (Index obs : g.members(i)) constraint += q * m->eval_moment({d.row(obs).data(), 1}, f.theta_hat);
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_LE(constraint.cwiseAbs().maxCoeff(), 1e-8);

  Rng rng(13);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Vector delta(2);
    delta << z(rng), z(rng);
    delta *= 0.5 * std::uniform_real_distribution<double>(0, 1)(rng) / delta.norm();
    Vector th = f.theta_hat + delta;
    if (th[1] <= 0) continue;
    try {
      EXPECT_GE(gel_log_ratio(d, g, *m, th).neg2logR, f.neg2logR_at_hat - 1e-9);
    } catch (const InfeasibleError&) {
    }
  }
}

TEST(Estimate, ConstrainedRegressionSatisfiesConstraint) {
  const DataMatrix d = ex2(3000, 14);
  Vector c = Vector::Zero(6);
  c.tail(5).setOnes();
  const auto m = linreg_constrained_model(5, c, 15.0, true);
  const GelFit f = gel_estimate(d, make_grouping(3000, 100, 1), *m);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.theta_hat.tail(5).sum(), 15.0, 1e-9);
  Vector truth(6);
  truth << 1.0, 1, 2, 3, 4, 5;
  EXPECT_LE((f.theta_hat - truth).cwiseAbs().maxCoeff(), 0.2);
}

TEST(Test, TwoGroupFixture) {
  const auto r = gel_test(column({1, 2, 3, 4}), explicit_grouping({2, 2}), *mean_model(1), scalar(2.0));
  EXPECT_NEAR(r.statistic, 2.0 * std::log(4.0 / 3.0), 1e-10);
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.p_value, 0.4482, 1e-4);
}

TEST(Test, AtEstimateGivesPValueOne) {
  const DataMatrix d = ex1(500, 15);
  const auto r = gel_test(d, make_grouping(500, 50, 1), *mean_model(1), scalar(d.col(0).mean()));
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-6);
}

TEST(Test, InfeasibleIsFlaggedRejection) {
  const auto r = gel_test(column({1, 2, 3, 4}), explicit_grouping({2, 2}), *mean_model(1), scalar(9.0));
  EXPECT_TRUE(r.infeasible);
  EXPECT_EQ(r.p_value, 0.0);
}

TEST(Test, AffineInvarianceOfMeanStatistic) {
  const DataMatrix d = ex1(800, 16);
  const Grouping g = make_grouping(800, 40, 3);
  const auto m = mean_model(1);
  const double base = gel_test(d, g, *m, scalar(0.1)).statistic;
  for (double c : {0.01, 0.5, 3.0, 1000.0}) {
    const DataMatrix dc = c * d;
    const double s = gel_test(dc, g, *m, scalar(0.1 * c)).statistic;
    EXPECT_LE(std::abs(s - base) / base, 1e-9) << c;
  }
}

TEST(Test, RawCalibrationUsesStochasticRows) {
  const DataMatrix d = ex1(2000, 17);
  Vector th0(2);
  th0 << 0.0, 2.0;
  const auto g = make_grouping(2000, 100, 1);
  const auto raw = gel_test(d, g, *normal_three_moment_model(), th0, {}, TestCalibration::raw);
  const auto prof = gel_test(d, g, *normal_three_moment_model(), th0);
  EXPECT_EQ(raw.df, 3);
  EXPECT_EQ(prof.df, 2);
  EXPECT_NEAR(raw.statistic, raw.raw_neg2logR / 20.0, 1e-12);
  EXPECT_NEAR(prof.statistic, (prof.raw_neg2logR - prof.min_neg2logR) / 20.0, 1e-12);
  EXPECT_LE(prof.statistic, raw.statistic + 1e-12);
}

TEST(Covariance, ThreePointFixture) {
  const Matrix v = asymptotic_covariance(column({1, 2, 3}), *mean_model(1), scalar(2.0));
  EXPECT_NEAR(v(0, 0), 2.0 / 3.0, 1e-14);
}

TEST(Covariance, NormalModelNearTheory) {
  // For N(mu, sigma^2) the efficient bound is diag(sigma^2, sigma^2 / 2).
  const DataMatrix d = ex1(200000, 18);
  Vector th(2);
  th << 0.0, 2.0;
  const Matrix v = asymptotic_covariance(d, *normal_three_moment_model(), th);
  EXPECT_NEAR(v(0, 0), 4.0, 0.2);
  EXPECT_NEAR(v(1, 1), 2.0, 0.1);
}

TEST(Covariance, SingularThrows) {
  EXPECT_THROW(asymptotic_covariance(column({2, 2, 2}), *mean_model(1), scalar(2.0)), SingularError);
}

TEST(Interval, SymmetricDataGivesSymmetricInterval) {
  const DataMatrix d = column({-3, -1, -2, 2, 1, 3, -0.5, 0.5});
  const auto g = singleton_grouping(8);
  const auto m = mean_model(1);
  const GelFit f = gel_estimate(d, g, *m);
  const auto [lo, hi] = confidence_interval(d, g, *m, f, 0, 0.95);
  EXPECT_LT(lo, 0.0);
  EXPECT_NEAR(lo, -hi, 1e-8);
}

TEST(Interval, EndpointsHitTheQuantile) {
  const DataMatrix d = ex1(3000, 19);
  const auto g = make_grouping(3000, 100, 1);
  const auto m = normal_three_moment_model();
  const GelFit f = gel_estimate(d, g, *m);
  const auto [lo, hi] = confidence_interval(d, g, *m, f, 0, 0.95);
  EXPECT_LT(lo, f.theta_hat[0]);
  EXPECT_GT(hi, f.theta_hat[0]);
  // Width close to the Wald interval.
  const double wald = 2 * 1.959964 * f.wald_sd[0];
  EXPECT_NEAR((hi - lo) / wald, 1.0, 0.25);
}

#include <gelkit/chisq.hpp>
#include <gelkit/errors.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

using namespace gelkit;

TEST(ChiSquare, Endpoints) {
  for (int df = 1; df <= 10; ++df) {
    EXPECT_DOUBLE_EQ(chisq_sf(0.0, df), 1.0);
    EXPECT_LT(chisq_sf(1e4, df), 1e-300);
  }
}

TEST(ChiSquare, KnownQuantile) { EXPECT_NEAR(chisq_sf(3.84146, 1), 0.05, 1e-5); }

TEST(ChiSquare, TwoGroupFixture) {
  // 4 log(4/3) / 2 from the four-point, two-group example.
  EXPECT_NEAR(chisq_sf(2.0 * std::log(4.0 / 3.0), 1), 0.4482, 1e-4);
}

TEST(ChiSquare, MatchesBoostOracle) {
  const double xs[] = {1e-8, 1e-3, 0.1, 0.5, 1, 2, 3.5, 5, 8, 12, 20, 35, 60, 100, 200};
  for (int df : {1, 2, 3, 4, 5, 7, 10, 15, 30, 60, 150}) {
    const boost::math::chi_squared dist(df);
    for (double x : xs) {
      const double ref = boost::math::cdf(boost::math::complement(dist, x));
      EXPECT_NEAR(chisq_sf(x, df), ref, 1e-12) << "x=" << x << " df=" << df;
      if (ref > 1e-280) EXPECT_LE(std::abs(chisq_sf(x, df) - ref) / ref, 1e-9) << "x=" << x << " df=" << df;
    }
  }
}

TEST(ChiSquare, QuantileInvertsSurvival) {
  for (int df : {1, 2, 5, 20}) {
    for (double p : {0.5, 0.9, 0.95, 0.99}) {
      const double q = chisq_quantile(p, df);
      EXPECT_NEAR(chisq_sf(q, df), 1.0 - p, 1e-12);
      EXPECT_NEAR(q, boost::math::quantile(boost::math::chi_squared(df), p), 1e-8 * q);
    }
  }
}

TEST(ChiSquare, RejectsBadArguments) {
  EXPECT_THROW(chisq_sf(-1.0, 1), ArgumentError);
  EXPECT_THROW(chisq_sf(1.0, 0), ArgumentError);
  EXPECT_THROW(chisq_quantile(1.0, 1), ArgumentError);
}

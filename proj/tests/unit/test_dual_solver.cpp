#include <gelkit/dual_solver.hpp>
#include <gelkit/errors.hpp>
#include <gelkit/random.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gelkit;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix z(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) z(i++, 0) = x;
  return z;
}

Vector uniform(Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

}  // namespace

TEST(LogStar, MatchesLogAboveThresholdAndIsC2) {
  const LogStarParams p{0.1};
  EXPECT_DOUBLE_EQ(log_star(0.5, p).value, std::log(0.5));
  const auto below = log_star(0.1 - 1e-12, p);
  const auto above = log_star(0.1 + 1e-12, p);
  EXPECT_NEAR(below.value, above.value, 1e-9);
  EXPECT_NEAR(below.d1, above.d1, 1e-8);
  EXPECT_NEAR(below.d2, above.d2, 1e-6);
  EXPECT_TRUE(std::isfinite(log_star(-5.0, p).value));
  EXPECT_LT(log_star(-5.0, p).d2, 0.0);
}

TEST(Dual, SymmetricPairHasZeroMultiplier) {
  const auto s = solve_dual(col({-1.0, 1.0}));
  EXPECT_NEAR(s.lambda[0], 0.0, 1e-12);
  EXPECT_NEAR(s.objective, 0.0, 1e-14);
  EXPECT_TRUE(s.feasible);
}

TEST(Dual, TwoPointClosedForm) {
  // z = (-1, 2): lambda = 1/4 and the weights are (2/3, 1/3).
  const auto s = solve_dual(col({-1.0, 2.0}));
  EXPECT_NEAR(s.lambda[0], 0.25, 1e-10);
  EXPECT_NEAR(s.weights[0], 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(s.weights[1], 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(s.objective, 0.5 * (std::log(0.75) + std::log(1.5)), 1e-12);
}

TEST(Dual, FourPointTwoGroupFixture) {
  // Group means -1/2 and 3/2 at theta = 1 for data {0, 1, 1, 2}: lambda = 2/3.
  const auto s = solve_dual(col({-0.5, 1.5}));
  EXPECT_NEAR(s.lambda[0], 2.0 / 3.0, 1e-10);
  // -2 log R = 2 N objective with N = 4.
  EXPECT_NEAR(8.0 * s.objective, 4.0 * std::log(4.0 / 3.0), 1e-10);
}

TEST(Dual, ScalarMatchesBisectionOracle) {
  Rng rng(2024);
  std::normal_distribution<double> zd(0.0, 1.0);
  std::exponential_distribution<double> ed(1.0);
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 5 + static_cast<Index>(uniform_below(rng, 200));
    const bool skewed = rep % 2 == 1;
    std::vector<double> z(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    double shift = 0.3 * zd(rng);
    for (auto& v : z) v = (skewed ? ed(rng) - 1.0 : zd(rng)) + shift;
    double total = 0;
    for (auto& v : w) total += (v = rep % 3 == 0 ? ud(rng) : 1.0);
    for (auto& v : w) v /= total;
    const auto [mn, mx] = std::minmax_element(z.begin(), z.end());
    if (!(*mn < 0 && *mx > 0)) continue;
    Matrix Z(n, 1);
    Vector W(n);
    for (Index i = 0; i < n; ++i) {
      Z(i, 0) = z[static_cast<std::size_t>(i)];
      W[i] = w[static_cast<std::size_t>(i)];
    }
    const auto s = solve_dual(Z, W);
    const double ref = oracle::scalar_dual_bisection(z, w);
    EXPECT_LE(std::abs(s.lambda[0] - ref), 1e-8 * std::max(1.0, std::abs(ref))) << "rep " << rep;
    EXPECT_NEAR(s.objective, oracle::dual_objective(Z, W, Vector::Constant(1, ref)), 1e-10);
    ++checked;
  }
  EXPECT_GE(checked, 90);
}

TEST(Dual, TwoDimensionalMatchesGridOracle) {
  Rng rng(77);
  std::normal_distribution<double> zd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 12 + static_cast<Index>(uniform_below(rng, 20));
    Matrix Z(n, 2);
    for (Index i = 0; i < n; ++i) {
      Z(i, 0) = zd(rng) + 0.3;
      Z(i, 1) = 0.5 * Z(i, 0) + zd(rng) - 0.2;
    }
    const Vector W = uniform(n);
    const auto s = solve_dual(Z, W);
    const double ref = oracle::grid_dual_r2(Z, W);
    EXPECT_NEAR(s.objective, ref, 1e-9) << "rep " << rep;
    EXPECT_GE(s.objective, ref - 1e-12);
  }
}

TEST(Dual, StationarityAndWeights) {
  Rng rng(5);
  std::normal_distribution<double> zd(0.0, 1.0);
  Matrix Z(300, 3);
  for (Index i = 0; i < Z.rows(); ++i)
    for (Index j = 0; j < 3; ++j) Z(i, j) = zd(rng) + 0.1 * j;
  const auto s = solve_dual(Z);
  EXPECT_TRUE(s.converged);
  EXPECT_LE(s.grad_norm, 1e-10);
  EXPECT_NEAR(s.weights.sum(), 1.0, 1e-12);
  EXPECT_TRUE((s.weights.array() > 0).all());
  // Reweighted mean of z is zero.
  EXPECT_LE((Z.transpose() * s.weights).norm(), 1e-10);
}

TEST(Dual, WeightedEqualsReplicated) {
  // Weight 2/3 on a point is the same as listing it twice.
  Matrix a(3, 1), b(2, 1);
  a << -1.0, -1.0, 3.0;
  b << -1.0, 3.0;
  Vector wb(2);
  wb << 2.0 / 3.0, 1.0 / 3.0;
  EXPECT_NEAR(solve_dual(a).lambda[0], solve_dual(b, wb).lambda[0], 1e-12);
  EXPECT_NEAR(solve_dual(a).objective, solve_dual(b, wb).objective, 1e-13);
}

TEST(Dual, LinearInvarianceOfObjective) {
  // Replacing z_i by A z_i for invertible A leaves the maximum unchanged.
  Rng rng(8);
  std::normal_distribution<double> zd(0.0, 1.0);
  Matrix Z(50, 2);
  for (Index i = 0; i < 50; ++i) Z.row(i) << zd(rng) + 0.2, zd(rng) - 0.1;
  Matrix A(2, 2);
  A << 2.0, 0.5, -1.0, 3.0;
  const Matrix ZA = Z * A.transpose();
  EXPECT_NEAR(solve_dual(Z).objective, solve_dual(ZA).objective, 1e-11);
}

TEST(Dual, InfeasibleWhenZeroOutsideHull) {
  EXPECT_THROW(solve_dual(col({1.0, 2.0, 3.0})), InfeasibleError);
  Matrix Z(3, 2);
  Z << 1, 0, 0, 1, 1, 1;
  EXPECT_THROW(solve_dual(Z), InfeasibleError);
  EXPECT_EQ(convex_hull_status(Z), HullStatus::exterior);
}

TEST(Dual, HullStatus) {
  Matrix in(4, 2);
  in << 1, 0, -1, 0, 0, 1, 0, -1;
  EXPECT_EQ(convex_hull_status(in), HullStatus::interior);
  EXPECT_TRUE(check_convex_hull(in));
  // Zero on the boundary is not interior.
  Matrix edge(2, 1);
  edge << 0.0, 1.0;
  EXPECT_FALSE(check_convex_hull(edge));
}

TEST(Dual, WarmStartGivesSameAnswer) {
  Rng rng(9);
  std::normal_distribution<double> zd(0.5, 1.0);
  Matrix Z(100, 1);
  for (Index i = 0; i < 100; ++i) Z(i, 0) = zd(rng);
  const Vector W = uniform(100);
  const auto cold = solve_dual(Z, W);
  const Vector start = Vector::Constant(1, 0.9 * cold.lambda[0]);
  const auto warm = solve_dual(Z, W, {}, &start);
  EXPECT_NEAR(cold.lambda[0], warm.lambda[0], 1e-10);
  EXPECT_LE(warm.iterations, cold.iterations);
}

TEST(Dual, NonConvergenceWithTinyBudget) {
  Matrix Z(4, 1);
  Z << -0.001, 5, 8, 9;
  DualOptions o;
  o.max_iter = 1;
  EXPECT_THROW(solve_dual(Z, uniform(4), o), NonConvergence);
}

#include "gelkit/simulate.hpp"

#include "gelkit/distributed.hpp"
#include "gelkit/errors.hpp"
#include "gelkit/random.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <random>

namespace gelkit {

DataMatrix gen_example1(Index N, double mu, double sigma, std::uint64_t seed) {
  if (N < 1) throw ArgumentError("gen_example1: N must be >= 1");
  if (!(sigma > 0.0)) throw ArgumentError("gen_example1: sigma must be > 0");
  Rng rng(seed);
  std::normal_distribution<double> dist(mu, sigma);
  DataMatrix out(N, 1);
  for (Index i = 0; i < N; ++i) out(i, 0) = dist(rng);
  return out;
}

DataMatrix gen_example2(Index N, Index p, double rho, double alpha, double beta0, const Vector& beta,
                        std::uint64_t seed) {
  if (N < 1 || p < 1) throw ArgumentError("gen_example2: N and p must be >= 1");
  if (!(rho > -1.0 && rho < 1.0)) throw ArgumentError("gen_example2: rho must lie in (-1, 1)");
  if (!(alpha >= 0.0)) throw ArgumentError("gen_example2: alpha must be >= 0");
  if (beta.size() != p) throw ArgumentError("gen_example2: beta must have length p");
  const Matrix cov = (1.0 - rho) * Matrix::Identity(p, p) + rho * Matrix::Ones(p, p);
  const Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success || (p > 1 && rho <= -1.0 / static_cast<double>(p - 1))) {
    throw ArgumentError("gen_example2: covariate covariance is not positive definite");
  }
  const Matrix L = llt.matrixL();
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  DataMatrix out(N, p + 1);
  Vector e(p);
  const double root_p = std::sqrt(static_cast<double>(p));
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < p; ++j) e[j] = z(rng);
    const Vector x = L * e;
    const double s = x.sum() / root_p;
    const double eps = std::sqrt(1.0 + alpha * s * s) * z(rng);
    out(i, 0) = beta0 + x.dot(beta) + eps;
    out.row(i).tail(p) = x.transpose();
  }
  return out;
}

namespace {

DataMatrix mixture(Index N, const double (&means)[3], const double (&vars)[3], std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  DataMatrix out(N, 1);
  for (Index i = 0; i < N; ++i) {
    const auto c = static_cast<std::size_t>(uniform_below(rng, 3));
    out(i, 0) = means[c] + std::sqrt(vars[c]) * z(rng);
  }
  return out;
}

}  // namespace

TwoSamples gen_example3(Index N1, Index N2, int j, std::uint64_t seed) {
  if (N1 < 1 || N2 < 1) throw ArgumentError("gen_example3: sample sizes must be >= 1");
  if (j < 0) throw ArgumentError("gen_example3: j must be >= 0");
  const double mx[3] = {0.0, 100.0, 1000.0};
  const double vx[3] = {1.0, 100.0, 1000.0};
  const double my[3] = {0.0, 100.0, 1000.0 + 20.0 * j};
  const double vy[3] = {2.0, 200.0, 3000.0};
  return {mixture(N1, mx, vx, splitmix(seed, 0)), mixture(N2, my, vy, splitmix(seed, 1))};
}

Vector dcel_estimate(const DataMatrix& data, Index k, const MomentModel& model, std::uint64_t seed,
                     const GelOptions& opts) {
  if (k < 1) throw ArgumentError("dcel_estimate: k must be >= 1");
  const auto blocks = partition_shards(data, k, seed, 1);
  Vector sum = Vector::Zero(model.param_dim());
  for (const auto& b : blocks) sum += el_estimate(b.data, model, std::nullopt, opts).theta_hat;
  return sum / static_cast<double>(k);
}

WelchResult welch_t_test(const DataMatrix& x, const DataMatrix& y) {
  const Index n1 = x.rows();
  const Index n2 = y.rows();
  if (n1 < 2 || n2 < 2) throw ArgumentError("welch_t_test: each sample needs at least two rows");
  auto moments = [](const DataMatrix& d, double& mean, double& var) {
    mean = d.col(0).mean();
    var = (d.col(0).array() - mean).square().sum() / static_cast<double>(d.rows() - 1);
  };
  double m1, v1, m2, v2;
  moments(x, m1, v1);
  moments(y, m2, v2);
  const double a = v1 / static_cast<double>(n1);
  const double b = v2 / static_cast<double>(n2);
  WelchResult r;
  if (a + b == 0.0) throw ArgumentError("welch_t_test: both samples are constant");
  r.statistic = (m1 - m2) / std::sqrt(a + b);
  r.df = (a + b) * (a + b) / (a * a / static_cast<double>(n1 - 1) + b * b / static_cast<double>(n2 - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
  return r;
}

}  // namespace gelkit

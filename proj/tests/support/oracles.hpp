#pragma once

// Independent reference computations for the test suites. None of these call
// the library's solvers.

#include <gelkit/types.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using gelkit::DataMatrix;
using gelkit::Index;
using gelkit::Matrix;
using gelkit::Vector;

/// Root of the decreasing score sum_i w_i z_i / (1 + lambda z_i) on the open
/// interval where every 1 + lambda z_i > 0.
inline double scalar_dual_bisection(const std::vector<double>& z, const std::vector<double>& w) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (double zi : z) {
    if (zi > 0) lo = std::max(lo, -1.0 / zi);
    if (zi < 0) hi = std::min(hi, -1.0 / zi);
  }
  auto score = [&](double l) {
    long double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * z[i] / (1.0L + l * z[i]);
    return static_cast<double>(s);
  };
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (score(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double scalar_dual_bisection(const std::vector<double>& z) {
  return scalar_dual_bisection(z, std::vector<double>(z.size(), 1.0 / static_cast<double>(z.size())));
}

/// sum_i w_i log(1 + lambda'z_i), -inf outside the domain.
inline double dual_objective(const Matrix& z, const Vector& w, const Vector& lambda) {
  double s = 0;
  for (Index i = 0; i < z.rows(); ++i) {
    const double u = 1.0 + z.row(i).dot(lambda);
    if (!(u > 0)) return -std::numeric_limits<double>::infinity();
    s += w[i] * std::log(u);
  }
  return s;
}

/// Maximum of the two-dimensional dual by successively refined grids.
inline double grid_dual_r2(const Matrix& z, const Vector& w, double radius = 20.0) {
  Vector best = Vector::Zero(2);
  double best_val = dual_objective(z, w, best);
  double half = radius;
  const int steps = 60;
  for (int level = 0; level < 40; ++level) {
    const Vector centre = best;
    for (int a = -steps; a <= steps; ++a) {
      for (int b = -steps; b <= steps; ++b) {
        Vector l(2);
        l << centre[0] + half * a / steps, centre[1] + half * b / steps;
        const double v = dual_objective(z, w, l);
        if (v > best_val) {
          best_val = v;
          best = l;
        }
      }
    }
    half *= 0.1;
  }
  return best_val;
}

/// Classical EL statistic 2 sum log(1 + lambda (x_i - theta)) for the scalar
/// mean by bisection on the multiplier; +inf if theta is outside (min, max).
inline double el_mean_neg2logR(const std::vector<double>& x, double theta) {
  std::vector<double> z;
  for (double v : x) z.push_back(v - theta);
  const auto [mn, mx] = std::minmax_element(z.begin(), z.end());
  if (!(*mn < 0 && *mx > 0)) return std::numeric_limits<double>::infinity();
  const double l = scalar_dual_bisection(z);
  double s = 0;
  for (double zi : z) s += std::log1p(l * zi);
  return 2.0 * s;
}

/// Two-sample EL for the mean difference with m = 1: for pi0 the statistic is
/// min over theta of the two one-sample statistics at theta and theta + pi0,
/// found by a dense grid followed by golden-section refinement.
inline double two_sample_brute(const std::vector<double>& x, const std::vector<double>& y, double pi0) {
  const double lo = std::max(*std::min_element(x.begin(), x.end()), *std::min_element(y.begin(), y.end()) - pi0);
  const double hi = std::min(*std::max_element(x.begin(), x.end()), *std::max_element(y.begin(), y.end()) - pi0);
  if (!(lo < hi)) return std::numeric_limits<double>::infinity();
  auto f = [&](double t) { return el_mean_neg2logR(x, t) + el_mean_neg2logR(y, t + pi0); };
  const int grid = 4000;
  double best_t = 0.5 * (lo + hi);
  double best = f(best_t);
  for (int k = 1; k < grid; ++k) {
    const double t = lo + (hi - lo) * k / grid;
    const double v = f(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  const double step = (hi - lo) / grid;
  double a = std::max(lo, best_t - step);
  double b = std::min(hi, best_t + step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    (f(c) < f(d) ? b : a) = (f(c) < f(d) ? d : c);
  }
  return std::min(best, f(0.5 * (a + b)));
}

/// Least squares with intercept by Householder QR on the design matrix.
inline Vector ols_qr(const DataMatrix& data) {
  const Index N = data.rows();
  const Index p = data.cols() - 1;
  Matrix X(N, p + 1);
  X.col(0).setOnes();
  X.rightCols(p) = data.rightCols(p);
  const Vector y = data.col(0);
  return X.householderQr().solve(y);
}

/// Central differences of f with step h_j = cbrt(eps) max(1, |theta_j|).
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& theta) {
  const Vector f0 = f(theta);
  Matrix J(f0.size(), theta.size());
  const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  for (Index j = 0; j < theta.size(); ++j) {
    const double h = h0 * std::max(1.0, std::abs(theta[j]));
    Vector tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    J.col(j) = (f(tp) - f(tm)) / (tp[j] - tm[j]);
  }
  return J;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
}

}  // namespace oracle

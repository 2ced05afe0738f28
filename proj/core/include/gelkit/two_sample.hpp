#pragma once

#include "gelkit/gel.hpp"
#include "gelkit/grouping.hpp"
#include "gelkit/moment_models.hpp"
#include "gelkit/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace gelkit {

/// Two independent samples grouped with a common block size m. Requires a
/// just-identified model (r = p).
struct TwoSampleProblem {
  DataMatrix X;
  DataMatrix Y;
  ModelPtr model;
  Index m = 1;
  Grouping gx;
  Grouping gy;
  std::uint64_t seed = 0;
  Index trimmed_x = 0;
  Index trimmed_y = 0;

  Index n1() const { return gx.n; }
  Index n2() const { return gy.n; }
  double tau1() const;
  double tau2() const;
};

/// Groups X with `seed` and Y with splitmix(seed, 1). Without `trim`, N1 and
/// N2 must be multiples of m (ArgumentError otherwise); with `trim` a seeded
/// random remainder is dropped from each sample and counted.
TwoSampleProblem make_two_sample_problem(DataMatrix X, DataMatrix Y, ModelPtr model, Index m, std::uint64_t seed,
                                         bool trim = false);

struct TwoSampleOptions {
  double tol = 1e-12;  // on the mean residual of the system
  int max_iter = 100;
  GelOptions gel{};
};

struct TwoSampleFit {
  Vector theta_x_star;
  Vector theta_y_star;
  Vector lambda_star;
  double neg2logR = 0;
  double statistic = 0;  // neg2logR / m
  int df = 0;
  double p_value = 1;
  bool converged = false;
  bool infeasible = false;
  int iterations = 0;
  std::string method;  // "newton" or "profile"
};

/// Solves the coupled multiplier system in (theta_x, lambda) with
/// theta_y = theta_x + pi0 and evaluates -2 log R_G(pi0). Falls back to
/// minimizing the sum of the two one-sample profiles over theta_x when damped
/// Newton fails. Throws InfeasibleError or NonConvergence.
TwoSampleFit solve_two_sample_system(const TwoSampleProblem& problem, const Vector& pi0,
                                     const std::optional<Vector>& theta_x_init = std::nullopt,
                                     const TwoSampleOptions& opts = {});

/// Chi-square(p) test of pi = pi0. Infeasibility is reported as a flagged
/// rejection with p_value 0.
TwoSampleFit two_sample_test(const TwoSampleProblem& problem, const Vector& pi0, const TwoSampleOptions& opts = {});

/// two_sample_test with mean_model(d).
TwoSampleFit two_sample_mean_test(const DataMatrix& X, const DataMatrix& Y, Index m, const Vector& delta0,
                                  std::uint64_t seed = 0, const TwoSampleOptions& opts = {});

}  // namespace gelkit

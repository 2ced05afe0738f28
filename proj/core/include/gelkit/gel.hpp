#pragma once

#include "gelkit/dual_solver.hpp"
#include "gelkit/grouping.hpp"
#include "gelkit/moment_models.hpp"
#include "gelkit/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gelkit {

/// Per-group means of g and the group weights d_i / N.
struct GroupedMoments {
  Matrix gbar;  // n x r
  Vector group_weights;
};

GroupedMoments group_moment_averages(const DataMatrix& data, const Grouping& grouping,
                                     const MomentModel& model, const Vector& theta);

struct GelOptions {
  /// The outer gradient inherits the inner error amplified by the conditioning
  /// of the dual Hessian, hence the tighter default.
  DualOptions inner{1e-12, 100, std::nullopt};
  /// Bound on the gradient norm of the per-observation profile -2 log R / (2N).
  double outer_tol = 1e-8;
  int max_outer = 200;
  /// Return a fit flagged converged = false instead of throwing NonConvergence.
  bool allow_nonconverged = false;
};

/// -2 log R_G(theta) = 2 sum_i d_i log(1 + lambda'gbar_i) with the dual
/// solution on the group means. `dual.lambda` has length r; entries of
/// data-free constraint rows are zero.
struct LogRatio {
  double neg2logR = 0;
  DualSolution dual;
};

/// Throws InfeasibleError (naming theta) when 0 is outside the hull of the
/// group means or theta violates a model constraint.
LogRatio gel_log_ratio(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                       const Vector& theta, const GelOptions& opts = {},
                       const Vector* warm_lambda = nullptr);

/// Envelope gradient of -2 log R_G at theta: 2 sum_i d_i Jbar_i' lambda / (1 + lambda'gbar_i).
Vector profile_gradient(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                        const Vector& theta, const DualSolution& dual);

struct GelFit {
  Vector theta_hat;
  Vector lambda_hat;
  Vector q_hat;  // per-observation probability of each group
  double neg2logR_at_hat = 0;
  int outer_iterations = 0;
  bool converged = false;
  double grad_norm = 0;  // per-observation scale, see GelOptions::outer_tol
  Matrix cov_hat;  // plug-in V, per observation; NaN when singular
  Vector wald_sd;  // sqrt(diag(V) / N)
  Index N = 0;
  Index n = 0;
  bool just_identified = false;
  int simplex_restarts = 0;
  std::vector<std::string> warnings;
};

/// Minimizes the profile -2 log R_G(theta). `theta_init` defaults to the
/// model's method-of-moments start.
GelFit gel_estimate(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                    const std::optional<Vector>& theta_init = std::nullopt, const GelOptions& opts = {});

/// How the test statistic is referred to a chi-square.
enum class TestCalibration {
  /// (-2 log R_G(theta0) - min_theta -2 log R_G(theta)) / m with df = number
  /// of free parameters. Identical to -2 log R_G(theta0) / m when r = p.
  profile,
  /// -2 log R_G(theta0) / m with df = number of stochastic moment rows.
  raw,
};

struct TestResult {
  double statistic = 0;
  int df = 0;
  double p_value = 1;
  double raw_neg2logR = 0;
  double min_neg2logR = 0;
  double m_bar = 1;
  bool infeasible = false;
  TestCalibration calibration = TestCalibration::profile;
};

/// Chi-square test of H0: theta = theta0. An infeasible theta0 is reported as
/// a rejection (p_value 0, infeasible flag) rather than thrown. `fit`, when
/// given, supplies the profile minimum for over-identified models.
TestResult gel_test(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                    const Vector& theta0, const GelOptions& opts = {},
                    TestCalibration calibration = TestCalibration::profile, const GelFit* fit = nullptr);

/// Profile-likelihood interval for one component: the set where the profiled
/// statistic stays below the chi-square(1) quantile at `level`. Other
/// components are re-optimized at each trial value.
std::pair<double, double> confidence_interval(const DataMatrix& data, const Grouping& grouping,
                                              const MomentModel& model, const GelFit& fit, Index component,
                                              double level, const GelOptions& opts = {});

/// V = (G' S^-1 G)^-1 with G the mean Jacobian and S the mean outer product
/// of g at theta. Data-free constraint rows are handled by restricting to the
/// constraint null space. Throws SingularError when S or the sandwich has
/// condition number above 1e12.
Matrix asymptotic_covariance(const DataMatrix& data, const MomentModel& model, const Vector& theta);

// Classical empirical likelihood: one weight per observation, computed directly
// from g(X_i, theta) without any grouping.
LogRatio el_log_ratio(const DataMatrix& data, const MomentModel& model, const Vector& theta,
                      const GelOptions& opts = {}, const Vector* warm_lambda = nullptr);

GelFit el_estimate(const DataMatrix& data, const MomentModel& model,
                   const std::optional<Vector>& theta_init = std::nullopt, const GelOptions& opts = {});

}  // namespace gelkit

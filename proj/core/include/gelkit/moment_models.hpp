#pragma once

#include "gelkit/types.hpp"

#include <json.hpp>

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gelkit {

/// Per-component open box (lower, upper). Infinite bounds mean unbounded.
struct ParameterDomain {
  Vector lower;
  Vector upper;

  static ParameterDomain unbounded(Index p);
  bool contains(const Vector& theta) const;
};

/// Moment rows that do not depend on the data: C * theta - v. The estimators
/// treat them as exact equality constraints on theta.
struct LinearConstraints {
  Matrix coeffs;          // k x p
  Vector values;          // k
  std::vector<Index> rows;  // moment rows carrying each constraint
};

/// Estimating-function family g(x, theta) with E[g(X, theta0)] = 0.
///
/// The virtual `moment`/`jacobian` hooks are the hot path and skip domain
/// checks; callers validate theta once per batch with `check_domain`.
/// Implementations are stateless and safe to share across threads.
class MomentModel {
 public:
  virtual ~MomentModel() = default;

  virtual std::string_view name() const = 0;
  Index data_dim() const { return data_dim_; }
  Index param_dim() const { return param_dim_; }
  Index moment_dim() const { return moment_dim_; }
  virtual bool has_analytic_jacobian() const { return false; }
  const ParameterDomain& domain() const { return domain_; }

  /// Throws DomainError when theta is outside the parameter domain or has the
  /// wrong length.
  void check_domain(const Vector& theta) const;

  Vector eval_moment(std::span<const double> x, const Vector& theta) const;
  Matrix eval_jacobian(std::span<const double> x, const Vector& theta) const;

  /// g(x, theta) into `out` (length r). No domain check.
  virtual void moment(std::span<const double> x, const Vector& theta,
                      Eigen::Ref<Vector> out) const = 0;

  /// dg/dtheta' into `out` (r x p). Defaults to central differences.
  virtual void jacobian(std::span<const double> x, const Vector& theta,
                        Eigen::Ref<Matrix> out) const;

  /// Adds g (and dg/dtheta' when `jac_sum` is non-null) over `rows` of `data`
  /// into the sums. The default calls `moment`/`jacobian` per row.
  virtual void accumulate(const DataMatrix& data, std::span<const Index> rows, const Vector& theta,
                          Eigen::Ref<Vector> g_sum, Matrix* jac_sum) const;

  /// Data-free moment rows, if any.
  virtual std::optional<LinearConstraints> parameter_constraints() const { return std::nullopt; }

  /// Method-of-moments starting value.
  virtual Vector initial_estimate(const DataMatrix& data) const = 0;

  /// JSON description accepted by make_model.
  virtual nlohmann::json config() const = 0;

 protected:
  MomentModel(Index d, Index p, Index r, ParameterDomain domain);

 private:
  Index data_dim_;
  Index param_dim_;
  Index moment_dim_;
  ParameterDomain domain_;
};

using ModelPtr = std::shared_ptr<const MomentModel>;

/// Central finite-difference Jacobian with step cbrt(eps) * max(1, |theta_j|).
/// Falls back to a one-sided difference when a central point would leave the
/// parameter domain.
Matrix finite_difference_jacobian(const MomentModel& model, std::span<const double> x,
                                  const Vector& theta);

/// g(x, theta) = x - theta, r = p = d.
ModelPtr mean_model(Index d);

/// theta = (mu, sigma), sigma > 0:
/// g = (mu - x, sigma^2 - (x - mu)^2, x^3 - mu (mu^2 + 3 sigma^2)).
ModelPtr normal_three_moment_model();

/// Linear regression y = b0 + x'b + e with observations (y, x_1..x_p).
/// Moment rows are (1, x')' (y - b0 - x'b); when `use_constraint` is set one
/// more row sum_j c_j theta_j - value is appended (c has length p + 1 and
/// indexes the full parameter vector including the intercept).
ModelPtr linreg_constrained_model(Index p, const Vector& constraint_coeffs, double constraint_value,
                                  bool use_constraint);

/// Unconstrained linear regression (r = p + 1, just-identified).
ModelPtr linreg_model(Index p);

/// Builds a model from {"model": "mean"|"normal3"|"linreg", "p": int,
/// "constraint": {"coeffs": [...], "value": num} | null}.
ModelPtr make_model(const nlohmann::json& config);

/// Ordinary least squares with an intercept; the normal-equation oracle for
/// the regression model. Data columns are (y, x_1..x_p).
Vector ols_fit(const DataMatrix& data);

}  // namespace gelkit

#pragma once

#include "gelkit/gel.hpp"
#include "gelkit/profile_optimizer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gelkit::internal {

/// Which moment rows carry data and which are parameter constraints.
struct MomentLayout {
  std::vector<Index> stochastic;
  Matrix constraint_coeffs;  // k x p (k may be 0)
  Vector constraint_values;

  explicit MomentLayout(const MomentModel& model);
  Index stochastic_dim() const { return static_cast<Index>(stochastic.size()); }
  Index free_dim(Index p) const { return p - constraint_coeffs.rows(); }
};

/// Moment summaries per likelihood unit (a group, or a single observation for
/// classical EL): z_i is the unit mean of the stochastic rows of g and jbar_i
/// the unit mean Jacobian of those rows, stored row-wise as r_s * p entries.
struct UnitMoments {
  Matrix z;
  Matrix jbar;
  Vector w;  // d_i / N
};

using UnitBuilder = std::function<UnitMoments(const Vector& theta, bool with_jacobian)>;

std::string format_theta(const Vector& theta);

/// Throws InfeasibleError if theta violates a data-free constraint row.
void check_constraints(const MomentLayout& layout, const Vector& theta);

/// -2 log R and the dual on prepared units (lambda expanded to length r).
LogRatio log_ratio_from_units(const UnitMoments& units, const MomentLayout& layout, Index r, Index N,
                              const Vector& theta, const GelOptions& opts, const Vector* warm_lambda);

/// 2 N sum_i w_i Jbar_i' lambda / (1 + lambda'z_i) with lambda over stochastic rows.
Vector gradient_from_units(const UnitMoments& units, const Vector& lambda_stochastic, Index N, Index p);

Vector stochastic_part(const Vector& lambda_full, const MomentLayout& layout);

/// Full-sample mean of g and of dg/dtheta' in observation order.
void full_sample_means(const DataMatrix& data, const MomentModel& model, const Vector& theta, Vector& gmean,
                       Matrix& jmean);

/// Units for a grouping: z_i and jbar_i are within-group means, w_i = d_i / N.
UnitMoments grouped_unit_moments(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                                 const MomentLayout& layout, const Vector& theta, bool with_jacobian);

/// Shared estimation driver for grouped and classical likelihoods.
GelFit estimate_with_units(const UnitBuilder& build, const DataMatrix& data, const MomentModel& model, Index n,
                           const std::optional<Vector>& theta_init, const GelOptions& opts);

/// Profile minimum over the subspace of `space`, used by estimation and by
/// profile intervals.
ProfileMinimum minimize_over(const UnitBuilder& build, const MomentModel& model, const MomentLayout& layout,
                             const AffineSubspace& space, Index N, const GelOptions& opts);

}  // namespace gelkit::internal

#pragma once

namespace gelkit {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly
/// in the tail so small values keep full relative accuracy.
double gamma_q(double a, double x);

/// Upper-tail probability of a chi-square with `df` degrees of freedom.
/// Throws ArgumentError for x < 0 or df < 1.
double chisq_sf(double x, int df);

/// Quantile q with P(chi2_df <= q) = prob, 0 < prob < 1.
double chisq_quantile(double prob, int df);

}  // namespace gelkit

#pragma once

#include "gelkit/types.hpp"

#include <optional>

namespace gelkit {

/// Threshold of the log-star extension; log u is replaced by a C2 quadratic
/// for u < epsilon.
struct LogStarParams {
  double epsilon;
};

struct LogStarValue {
  double value;
  double d1;
  double d2;
};

LogStarValue log_star(double u, LogStarParams params);

/// Solution of max_lambda sum_i w_i log*(1 + lambda'z_i).
struct DualSolution {
  Vector lambda;
  Vector weights;        // w_i / (1 + lambda'z_i), normalized to sum 1
  double objective = 0;  // sum_i w_i log(1 + lambda'z_i)
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0;  // || sum_i w_i z_i / (1 + lambda'z_i) ||
  bool feasible = false; // every 1 + lambda'z_i > 0
  bool regularized = false;
};

struct DualOptions {
  /// Score-norm tolerance, raised to the rounding level of the score sum when
  /// that is larger.
  double tol = 1e-10;
  int max_iter = 100;
  /// Log-star threshold; defaults to min_i w_i (1/n for uniform weights).
  std::optional<double> epsilon;
};

/// Damped Newton on the concave log-star dual. Rows of `z` are the moment
/// vectors; `w` are nonnegative weights summing to 1. `lambda0` warm-starts.
/// Throws InfeasibleError when 0 is not interior to conv{z_i} and
/// NonConvergence when the iteration budget is exhausted.
DualSolution solve_dual(const Matrix& z, const Vector& w, const DualOptions& opts = {},
                        const Vector* lambda0 = nullptr);

/// Uniform weights 1/n.
DualSolution solve_dual(const Matrix& z, const DualOptions& opts = {});

enum class HullStatus { interior, exterior, unknown };

/// Decides whether 0 is interior to conv{z_i}. Exact for one column; for more
/// columns minimizes log sum_i exp(lambda'z_i), which has a minimizer exactly
/// when 0 is a strictly positive combination of the z_i.
HullStatus convex_hull_status(const Matrix& z);

/// True iff 0 is interior to conv{z_i}; an undecided auxiliary problem is
/// resolved by attempting the dual solve.
bool check_convex_hull(const Matrix& z);

}  // namespace gelkit

#pragma once

#include "gelkit/types.hpp"

#include <functional>
#include <optional>

namespace gelkit {

/// theta = origin + basis * u; the feasible set of the linear equality
/// constraints active for a fit.
struct AffineSubspace {
  Vector origin;
  Matrix basis;  // p x k, orthonormal columns

  Vector to_theta(const Vector& u) const { return origin + basis * u; }
  Index dim() const { return basis.cols(); }
};

/// Projects `start` onto {theta : C theta = v}. An empty C gives the full space.
AffineSubspace make_subspace(const Vector& start, const Matrix& C, const Vector& v);

/// Value and theta-gradient of a profile objective; std::nullopt marks an
/// infeasible or out-of-domain theta.
struct ProfilePoint {
  double value = 0;
  Vector grad;
};
using ProfileFn = std::function<std::optional<ProfilePoint>(const Vector& theta)>;

struct ProfileMinimizeOptions {
  double grad_tol = 1e-8;
  int max_iter = 200;
};

struct ProfileMinimum {
  Vector theta;
  double value = 0;
  double grad_norm = 0;  // norm of the gradient projected on the subspace
  int iterations = 0;
  bool converged = false;
  int simplex_restarts = 0;
};

/// Quasi-Newton (BFGS) descent over the subspace starting at its origin. The
/// inverse-Hessian seed is `hessian_guess^{-1}` in subspace coordinates (falls
/// back to identity when not positive definite). When a line search cannot
/// leave an infeasible region a Nelder-Mead restart takes over before
/// resuming. Throws InfeasibleAtInit if the origin is infeasible.
ProfileMinimum minimize_profile(const ProfileFn& fn, const AffineSubspace& space,
                                const Matrix& hessian_guess, const ProfileMinimizeOptions& opts);

}  // namespace gelkit

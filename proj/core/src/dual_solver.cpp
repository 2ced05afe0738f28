#include "gelkit/dual_solver.hpp"

#include "gelkit/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace gelkit {

LogStarValue log_star(double u, LogStarParams params) {
  const double eps = params.epsilon;
  if (u >= eps) return {std::log(u), 1.0 / u, -1.0 / (u * u)};
  const double r = u / eps;
  return {std::log(eps) - 1.5 + 2.0 * r - 0.5 * r * r, (2.0 - r) / eps, -1.0 / (eps * eps)};
}

namespace {

struct DualState {
  Vector u;      // 1 + z lambda
  double value;  // sum w log*(u)
};

double dual_value(const Vector& u, const Vector& w, LogStarParams ls) {
  double total = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    if (w[i] != 0.0) total += w[i] * log_star(u[i], ls).value;
  }
  return total;
}

[[noreturn]] void throw_infeasible(const char* why) {
  std::ostringstream os;
  os << "dual problem infeasible: 0 is not interior to the convex hull of the moment vectors (" << why << ")";
  throw InfeasibleError(os.str());
}

}  // namespace

DualSolution solve_dual(const Matrix& z, const Vector& w, const DualOptions& opts, const Vector* lambda0) {
  const Index n = z.rows();
  const Index r = z.cols();
  if (n < 1 || r < 1) throw ArgumentError("solve_dual: empty moment matrix");
  if (w.size() != n) throw ArgumentError("solve_dual: weight length mismatch");
  if (!z.allFinite()) throw ArgumentError("solve_dual: non-finite moment vector");
  if (!(opts.tol > 0.0)) throw ArgumentError("solve_dual: tol must be positive");
  if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-9) {
    throw ArgumentError("solve_dual: weights must be nonnegative and sum to 1");
  }

  if (r == 1) {
    if (!(z.col(0).minCoeff() < 0.0 && z.col(0).maxCoeff() > 0.0)) throw_infeasible("one-dimensional hull");
  }

  double min_w = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (w[i] > 0.0) min_w = std::min(min_w, w[i]);
  }
  const LogStarParams ls{opts.epsilon.value_or(min_w)};
  if (!(ls.epsilon > 0.0)) throw ArgumentError("solve_dual: log-star threshold must be positive");

  DualSolution sol;
  sol.lambda = lambda0 != nullptr && lambda0->size() == r ? *lambda0 : Vector::Zero(r);

  Vector zl(n), u(n), d1(n), c(n), grad(r), step(r);
  Matrix hess(r, r);
  zl.noalias() = z * sol.lambda;
  u = zl.array() + 1.0;
  double value = dual_value(u, w, ls);

  auto raw_mass = [&](const Vector& uu) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += w[i] / uu[i];
    return s;
  };

  bool stalled = false;
  for (int it = 0;; ++it) {
    for (Index i = 0; i < n; ++i) {
      const auto v = log_star(u[i], ls);
      d1[i] = w[i] * v.d1;
      c[i] = -w[i] * v.d2;
    }
    grad.noalias() = z.transpose() * d1;
    sol.grad_norm = grad.norm();
    sol.iterations = it;

    // The score cannot be resolved below the rounding in its summands.
    double magnitude = 0.0;
    for (Index i = 0; i < n; ++i) magnitude += std::abs(d1[i]) * z.row(i).norm();
    const double tol = std::max(opts.tol, 64.0 * std::numeric_limits<double>::epsilon() * magnitude);

    const bool inside = (u.array() > 0.0).all();
    bool in_log_branch = true;
    for (Index i = 0; i < n && in_log_branch; ++i) in_log_branch = w[i] == 0.0 || u[i] >= ls.epsilon;
    if (sol.grad_norm <= tol && inside && in_log_branch &&
        std::abs(raw_mass(u) - 1.0) <= 1e-8) {
      sol.converged = true;
      break;
    }
    if (it > 0 && zl.minCoeff() > 0.0) throw_infeasible("separating direction found");
    if (it >= opts.max_iter || stalled) break;

    hess.noalias() = z.transpose() * c.asDiagonal() * z;
    Eigen::LDLT<Matrix> ldlt(hess);
    const auto diag = ldlt.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(diag.minCoeff() > 1e-14 * dmax) || dmax == 0.0) {
      const double trace = hess.trace();
      const double ridge = 1e-12 * (trace > 0.0 ? trace : 1.0) / static_cast<double>(r);
      hess.diagonal().array() += ridge;
      ldlt.compute(hess);
      sol.regularized = true;
    }
    step = ldlt.solve(grad);
    if (!step.allFinite()) break;

    // Backtracking: halve until the objective does not decrease beyond the
    // rounding level of its evaluation.
    Vector zstep = z * step;
    double t = 1.0;
    bool accepted = false;
    Vector u_new(n);
    double value_new = value;
    const double slack = 1e-15 * (1.0 + std::abs(value));
    for (int h = 0; h <= 50; ++h, t *= 0.5) {
      u_new = u + t * zstep;
      value_new = dual_value(u_new, w, ls);
      if (value_new >= value - slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      continue;
    }
    sol.lambda += t * step;
    zl += t * zstep;
    u = u_new;
    value = value_new;
  }

  sol.feasible = (u.array() > 0.0).all();
  if (!sol.converged) {
    const auto status = convex_hull_status(z);
    if (status == HullStatus::exterior) throw_infeasible("hull check");
    if (!sol.feasible) throw_infeasible("solution outside the log domain");
    const double reach = (z.rowwise().norm().maxCoeff()) * sol.lambda.norm();
    if (status == HullStatus::unknown && reach > 1e8) throw_infeasible("diverging multiplier");
    std::ostringstream os;
    os << "solve_dual: no convergence after " << sol.iterations << " iterations (gradient norm "
       << sol.grad_norm << ")";
    throw NonConvergence(os.str());
  }

  double obj = 0.0;
  sol.weights.resize(n);
  for (Index i = 0; i < n; ++i) {
    obj += w[i] * std::log(u[i]);
    sol.weights[i] = w[i] / u[i];
  }
  sol.weights /= sol.weights.sum();
  sol.objective = obj;
  return sol;
}

DualSolution solve_dual(const Matrix& z, const DualOptions& opts) {
  const Index n = z.rows();
  if (n < 1) throw ArgumentError("solve_dual: empty moment matrix");
  return solve_dual(z, Vector::Constant(n, 1.0 / static_cast<double>(n)), opts);
}

HullStatus convex_hull_status(const Matrix& z) {
  const Index n = z.rows();
  const Index r = z.cols();
  if (n == 0 || r == 0) return HullStatus::exterior;
  if (r == 1) {
    return z.col(0).minCoeff() < 0.0 && z.col(0).maxCoeff() > 0.0 ? HullStatus::interior : HullStatus::exterior;
  }
  if (n <= r) return HullStatus::exterior;

  const double scale = z.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) return HullStatus::exterior;
  const Matrix zs = z / scale;

  const Matrix gram = zs.transpose() * zs;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 1e-12 * eig.eigenvalues().maxCoeff()) return HullStatus::exterior;

  // Newton on phi(lambda) = log sum exp(lambda'z_i).
  Vector lambda = Vector::Zero(r);
  Vector s(n), prob(n), mean(r);
  Matrix cov(r, r);
  auto phi = [&](const Vector& lam, Vector& out_s) {
    out_s.noalias() = zs * lam;
    const double mx = out_s.maxCoeff();
    return mx + std::log((out_s.array() - mx).exp().sum());
  };
  double f = phi(lambda, s);
  for (int it = 0; it < 200; ++it) {
    if (it > 0 && s.maxCoeff() < 0.0) return HullStatus::exterior;
    const double mx = s.maxCoeff();
    prob = (s.array() - mx).exp();
    prob /= prob.sum();
    mean.noalias() = zs.transpose() * prob;
    if (mean.norm() <= 1e-12) return HullStatus::interior;
    cov.noalias() = zs.transpose() * prob.asDiagonal() * zs;
    cov -= mean * mean.transpose();
    cov.diagonal().array() += 1e-14 * std::max(1.0, cov.trace());
    const Vector step = -cov.ldlt().solve(mean);
    const double slope = mean.dot(step);
    double t = 1.0;
    Vector s_new(n);
    bool moved = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const double f_new = phi(lambda + t * step, s_new);
      if (f_new <= f + 1e-4 * t * slope) {
        lambda += t * step;
        s = s_new;
        f = f_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return HullStatus::unknown;
}

bool check_convex_hull(const Matrix& z) {
  const auto status = convex_hull_status(z);
  if (status != HullStatus::unknown) return status == HullStatus::interior;
  try {
    (void)solve_dual(z);
    return true;
  } catch (const InfeasibleError&) {
    return false;
  } catch (const NonConvergence&) {
    return false;
  }
}

}  // namespace gelkit

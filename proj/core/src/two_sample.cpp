#include "gelkit/two_sample.hpp"

#include "gel_internal.hpp"
#include "gelkit/chisq.hpp"
#include "gelkit/errors.hpp"
#include "gelkit/profile_optimizer.hpp"
#include "gelkit/random.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gelkit {

double TwoSampleProblem::tau1() const {
  return static_cast<double>(X.rows() + Y.rows()) / static_cast<double>(X.rows());
}

double TwoSampleProblem::tau2() const {
  return static_cast<double>(X.rows() + Y.rows()) / static_cast<double>(Y.rows());
}

namespace {

DataMatrix drop_remainder(const DataMatrix& data, Index m, std::uint64_t seed, Index& dropped) {
  const Index N = data.rows();
  dropped = N % m;
  if (dropped == 0) return data;
  const auto perm = seeded_permutation(N, seed);
  std::vector<bool> drop(static_cast<std::size_t>(N), false);
  for (Index k = 0; k < dropped; ++k) drop[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = true;
  DataMatrix out(N - dropped, data.cols());
  Index row = 0;
  for (Index i = 0; i < N; ++i) {
    if (!drop[static_cast<std::size_t>(i)]) out.row(row++) = data.row(i);
  }
  return out;
}

struct SideEval {
  internal::UnitMoments units;
  Vector denom;
};

}  // namespace

TwoSampleProblem make_two_sample_problem(DataMatrix X, DataMatrix Y, ModelPtr model, Index m, std::uint64_t seed,
                                         bool trim) {
  if (!model) throw ArgumentError("two-sample: model is null");
  if (model->moment_dim() != model->param_dim()) {
    throw ArgumentError("two-sample GEL requires a just-identified model (r = p)");
  }
  if (model->parameter_constraints()) throw ArgumentError("two-sample GEL does not support constrained models");
  if (X.cols() != model->data_dim() || Y.cols() != model->data_dim()) {
    throw ArgumentError("two-sample: data columns do not match the model");
  }
  if (m < 1) throw ArgumentError("two-sample: group size m must be >= 1");
  TwoSampleProblem prob;
  prob.model = std::move(model);
  prob.m = m;
  prob.seed = seed;
  if (X.rows() % m != 0 || Y.rows() % m != 0) {
    if (!trim) {
      throw ArgumentError("two-sample: N1 = " + std::to_string(X.rows()) + " and N2 = " + std::to_string(Y.rows()) +
                          " must both be multiples of m = " + std::to_string(m) + " (use trim to drop remainders)");
    }
    X = drop_remainder(X, m, splitmix(seed, 2), prob.trimmed_x);
    Y = drop_remainder(Y, m, splitmix(seed, 3), prob.trimmed_y);
  }
  if (X.rows() < m || Y.rows() < m) throw ArgumentError("two-sample: each sample needs at least m observations");
  prob.X = std::move(X);
  prob.Y = std::move(Y);
  prob.gx = make_grouping(prob.X.rows(), prob.X.rows() / m, seed);
  prob.gy = make_grouping(prob.Y.rows(), prob.Y.rows() / m, splitmix(seed, 1));
  return prob;
}

namespace {

double side_log_sum(const Vector& denom) {
  double s = 0.0;
  for (Index i = 0; i < denom.size(); ++i) s += std::log(denom[i]);
  return s;
}

// One-sample profile on each side, summed: the inner problems decouple once
// theta_x is fixed, so min over theta_x gives the same statistic.
TwoSampleFit solve_by_profile(const TwoSampleProblem& prob, const Vector& pi0, const Vector& start,
                              const TwoSampleOptions& opts) {
  const MomentModel& model = *prob.model;
  const internal::MomentLayout layout(model);
  const Index p = model.param_dim();
  const Index r = model.moment_dim();
  const Index N1 = prob.X.rows();
  const Index N2 = prob.Y.rows();
  const double scale = 2.0 * static_cast<double>(N1 + N2);
  Vector warm_x, warm_y;
  ProfileFn fn = [&](const Vector& tx) -> std::optional<ProfilePoint> {
    const Vector ty = tx + pi0;
    if (!model.domain().contains(tx) || !model.domain().contains(ty)) return std::nullopt;
    try {
      const auto ux = internal::grouped_unit_moments(prob.X, prob.gx, model, layout, tx, true);
      const auto uy = internal::grouped_unit_moments(prob.Y, prob.gy, model, layout, ty, true);
      const LogRatio lx = internal::log_ratio_from_units(ux, layout, r, N1, tx, opts.gel, warm_x.size() ? &warm_x : nullptr);
      const LogRatio ly = internal::log_ratio_from_units(uy, layout, r, N2, ty, opts.gel, warm_y.size() ? &warm_y : nullptr);
      warm_x = lx.dual.lambda;
      warm_y = ly.dual.lambda;
      ProfilePoint pt;
      pt.value = (lx.neg2logR + ly.neg2logR) / scale;
      pt.grad = (internal::gradient_from_units(ux, lx.dual.lambda, N1, p) +
                 internal::gradient_from_units(uy, ly.dual.lambda, N2, p)) /
                scale;
      return pt;
    } catch (const InfeasibleError&) {
      return std::nullopt;
    } catch (const NonConvergence&) {
      return std::nullopt;
    }
  };
  AffineSubspace space{start, Matrix::Identity(p, p)};
  ProfileMinimizeOptions mo;
  mo.grad_tol = opts.gel.outer_tol;
  mo.max_iter = opts.gel.max_outer;
  ProfileMinimum min;
  try {
    min = minimize_profile(fn, space, Matrix(), mo);
  } catch (const InfeasibleAtInit&) {
    throw InfeasibleError("two-sample: pi0 is outside the feasible region (no theta_x puts 0 inside both hulls)");
  }
  TwoSampleFit fit;
  fit.theta_x_star = min.theta;
  fit.theta_y_star = min.theta + pi0;
  fit.neg2logR = min.value * scale;
  fit.converged = min.converged;
  fit.iterations = min.iterations;
  fit.method = "profile";
  const auto ux = internal::grouped_unit_moments(prob.X, prob.gx, model, layout, fit.theta_x_star, false);
  const LogRatio lx = internal::log_ratio_from_units(ux, layout, r, N1, fit.theta_x_star, opts.gel, nullptr);
  // p_i = 1 / (N1 (1 + mu'gbar_i)) = 1 / (N1 (1 - tau1 lambda'gbar_i)).
  fit.lambda_star = -lx.dual.lambda / prob.tau1();
  if (!fit.converged) throw NonConvergence("two-sample: profile minimization did not converge");
  return fit;
}

}  // namespace

TwoSampleFit solve_two_sample_system(const TwoSampleProblem& prob, const Vector& pi0,
                                     const std::optional<Vector>& theta_x_init, const TwoSampleOptions& opts) {
  const MomentModel& model = *prob.model;
  const Index p = model.param_dim();
  if (pi0.size() != p) throw ArgumentError("two-sample: pi0 has wrong length");
  if (prob.X.rows() != prob.m * prob.n1() || prob.Y.rows() != prob.m * prob.n2()) {
    throw ArgumentError("two-sample: sample sizes are not multiples of m");
  }
  const internal::MomentLayout layout(model);
  const double tau1 = prob.tau1();
  const double tau2 = prob.tau2();
  const Index n1 = prob.n1();
  const Index n2 = prob.n2();

  Vector tx;
  if (theta_x_init) {
    tx = *theta_x_init;
  } else {
    // Sample-size weighted compromise of the two local fits; equals the X fit
    // when pi0 is the unconstrained difference.
    const GelFit fx = gel_estimate(prob.X, prob.gx, model, std::nullopt, opts.gel);
    const GelFit fy = gel_estimate(prob.Y, prob.gy, model, std::nullopt, opts.gel);
    const double w1 = static_cast<double>(prob.X.rows()) / static_cast<double>(prob.X.rows() + prob.Y.rows());
    tx = w1 * fx.theta_hat + (1.0 - w1) * (fy.theta_hat - pi0);
    if (!model.domain().contains(tx) || !model.domain().contains(tx + pi0)) tx = fx.theta_hat;
  }
  if (tx.size() != p) throw ArgumentError("two-sample: theta_x_init has wrong length");

  Vector lambda = Vector::Zero(p);
  auto evaluate = [&](const Vector& t, const Vector& lam, SideEval& ex, SideEval& ey, Vector& F) -> bool {
    const Vector ty = t + pi0;
    if (!model.domain().contains(t) || !model.domain().contains(ty)) return false;
    ex.units = internal::grouped_unit_moments(prob.X, prob.gx, model, layout, t, true);
    ey.units = internal::grouped_unit_moments(prob.Y, prob.gy, model, layout, ty, true);
    ex.denom = (1.0 - tau1 * (ex.units.z * lam).array()).matrix();
    ey.denom = (1.0 + tau2 * (ey.units.z * lam).array()).matrix();
    if (ex.denom.minCoeff() <= 0.0 || ey.denom.minCoeff() <= 0.0) return false;
    F.resize(2 * p);
    F.head(p) = ex.units.z.transpose() * ex.denom.cwiseInverse() / static_cast<double>(n1);
    F.tail(p) = ey.units.z.transpose() * ey.denom.cwiseInverse() / static_cast<double>(n2);
    return F.allFinite();
  };

  TwoSampleFit fit;
  fit.method = "newton";
  SideEval ex, ey;
  Vector F;
  bool ok = evaluate(tx, lambda, ex, ey, F);
  bool newton_done = false;
  if (ok) {
    for (int it = 0; it < opts.max_iter; ++it) {
      fit.iterations = it + 1;
      if (F.norm() <= opts.tol) {
        newton_done = true;
        break;
      }
      Matrix Jac = Matrix::Zero(2 * p, 2 * p);
      for (Index i = 0; i < n1; ++i) {
        const Vector a = ex.units.z.row(i).transpose();
        Matrix J(p, p);
        for (Index r = 0; r < p; ++r)
          for (Index b = 0; b < p; ++b) J(r, b) = ex.units.jbar(i, r * p + b);
        const double D = ex.denom[i];
        Jac.topLeftCorner(p, p) += J / D + a * (tau1 * (lambda.transpose() * J)) / (D * D);
        Jac.topRightCorner(p, p) += tau1 * a * a.transpose() / (D * D);
      }
      for (Index j = 0; j < n2; ++j) {
        const Vector b = ey.units.z.row(j).transpose();
        Matrix K(p, p);
        for (Index r = 0; r < p; ++r)
          for (Index c = 0; c < p; ++c) K(r, c) = ey.units.jbar(j, r * p + c);
        const double E = ey.denom[j];
        Jac.bottomLeftCorner(p, p) += K / E - b * (tau2 * (lambda.transpose() * K)) / (E * E);
        Jac.bottomRightCorner(p, p) -= tau2 * b * b.transpose() / (E * E);
      }
      Jac.topRows(p) /= static_cast<double>(n1);
      Jac.bottomRows(p) /= static_cast<double>(n2);
      const Eigen::FullPivLU<Matrix> lu(Jac);
      if (!lu.isInvertible()) break;
      const Vector step = lu.solve(F);
      if (!step.allFinite()) break;
      double t = 1.0;
      bool accepted = false;
      for (int h = 0; h < 60; ++h, t *= 0.5) {
        const Vector tx_new = tx - t * step.head(p);
        const Vector lam_new = lambda - t * step.tail(p);
        SideEval ex2, ey2;
        Vector F2;
        if (!evaluate(tx_new, lam_new, ex2, ey2, F2)) continue;
        if (F2.norm() < (1.0 - 1e-4 * t) * F.norm() || F2.norm() <= opts.tol) {
          tx = tx_new;
          lambda = lam_new;
          ex = std::move(ex2);
          ey = std::move(ey2);
          F = std::move(F2);
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        newton_done = F.norm() <= 1e3 * opts.tol;
        break;
      }
    }
  }

  // F also vanishes as lambda runs off to infinity; a genuine root has
  // implied weights summing to one on each side.
  if (newton_done) {
    const double mass_x = ex.denom.cwiseInverse().mean();
    const double mass_y = ey.denom.cwiseInverse().mean();
    newton_done = std::abs(mass_x - 1.0) <= 1e-8 && std::abs(mass_y - 1.0) <= 1e-8;
  }
  if (!newton_done) {
    TwoSampleFit alt = solve_by_profile(prob, pi0, tx, opts);
    alt.df = static_cast<int>(p);
    return alt;
  }
  fit.theta_x_star = tx;
  fit.theta_y_star = tx + pi0;
  fit.lambda_star = lambda;
  fit.neg2logR = 2.0 * static_cast<double>(prob.m) * (side_log_sum(ex.denom) + side_log_sum(ey.denom));
  fit.converged = true;
  fit.df = static_cast<int>(p);
  return fit;
}

TwoSampleFit two_sample_test(const TwoSampleProblem& problem, const Vector& pi0, const TwoSampleOptions& opts) {
  TwoSampleFit fit;
  try {
    fit = solve_two_sample_system(problem, pi0, std::nullopt, opts);
  } catch (const InfeasibleError&) {
    fit = TwoSampleFit{};
    fit.infeasible = true;
    fit.neg2logR = std::numeric_limits<double>::infinity();
    fit.statistic = std::numeric_limits<double>::infinity();
    fit.df = static_cast<int>(problem.model->param_dim());
    fit.p_value = 0.0;
    return fit;
  }
  fit.df = static_cast<int>(problem.model->param_dim());
  fit.statistic = std::max(0.0, fit.neg2logR) / static_cast<double>(problem.m);
  fit.p_value = chisq_sf(fit.statistic, fit.df);
  return fit;
}

TwoSampleFit two_sample_mean_test(const DataMatrix& X, const DataMatrix& Y, Index m, const Vector& delta0,
                                  std::uint64_t seed, const TwoSampleOptions& opts) {
  if (X.cols() != Y.cols()) throw ArgumentError("two-sample: X and Y have different dimensions");
  const auto prob = make_two_sample_problem(X, Y, mean_model(X.cols()), m, seed, false);
  return two_sample_test(prob, delta0, opts);
}

}  // namespace gelkit

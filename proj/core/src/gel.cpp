#include "gelkit/gel.hpp"

#include "gel_internal.hpp"
#include "gelkit/chisq.hpp"
#include "gelkit/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>

namespace gelkit {

namespace internal {

MomentLayout::MomentLayout(const MomentModel& model) {
  const Index r = model.moment_dim();
  const Index p = model.param_dim();
  std::vector<bool> is_constraint(static_cast<std::size_t>(r), false);
  if (auto lc = model.parameter_constraints()) {
    constraint_coeffs = lc->coeffs;
    constraint_values = lc->values;
    for (Index row : lc->rows) is_constraint[static_cast<std::size_t>(row)] = true;
  } else {
    constraint_coeffs.resize(0, p);
    constraint_values.resize(0);
  }
  for (Index a = 0; a < r; ++a) {
    if (!is_constraint[static_cast<std::size_t>(a)]) stochastic.push_back(a);
  }
}

std::string format_theta(const Vector& theta) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (Index j = 0; j < theta.size(); ++j) os << (j ? ", " : "") << theta[j];
  os << ")";
  return os.str();
}

void check_constraints(const MomentLayout& layout, const Vector& theta) {
  if (layout.constraint_coeffs.rows() == 0) return;
  const Vector resid = layout.constraint_coeffs * theta - layout.constraint_values;
  const double scale = 1.0 + layout.constraint_values.cwiseAbs().maxCoeff() +
                       layout.constraint_coeffs.cwiseAbs().maxCoeff() * theta.cwiseAbs().sum();
  if (resid.cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InfeasibleError("theta = " + format_theta(theta) +
                          " violates a data-free moment constraint; the likelihood ratio is zero");
  }
}

Vector stochastic_part(const Vector& lambda_full, const MomentLayout& layout) {
  Vector out(layout.stochastic_dim());
  for (Index a = 0; a < out.size(); ++a) out[a] = lambda_full[layout.stochastic[static_cast<std::size_t>(a)]];
  return out;
}

LogRatio log_ratio_from_units(const UnitMoments& units, const MomentLayout& layout, Index r, Index N,
                              const Vector& theta, const GelOptions& opts, const Vector* warm_lambda) {
  check_constraints(layout, theta);
  Vector warm;
  const Vector* warm_ptr = nullptr;
  if (warm_lambda != nullptr && warm_lambda->size() == r) {
    warm = stochastic_part(*warm_lambda, layout);
    if (warm.allFinite()) warm_ptr = &warm;
  }
  LogRatio out;
  try {
    out.dual = solve_dual(units.z, units.w, opts.inner, warm_ptr);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string(e.what()) + " at theta = " + format_theta(theta));
  }
  Vector full = Vector::Zero(r);
  for (Index a = 0; a < layout.stochastic_dim(); ++a) {
    full[layout.stochastic[static_cast<std::size_t>(a)]] = out.dual.lambda[a];
  }
  out.dual.lambda = std::move(full);
  out.neg2logR = 2.0 * static_cast<double>(N) * out.dual.objective;
  return out;
}

Vector gradient_from_units(const UnitMoments& units, const Vector& lambda, Index N, Index p) {
  const Index n = units.z.rows();
  const Index rs = units.z.cols();
  Vector grad = Vector::Zero(p);
  const Vector u = (units.z * lambda).array() + 1.0;
  for (Index i = 0; i < n; ++i) {
    const double coef = 2.0 * static_cast<double>(N) * units.w[i] / u[i];
    for (Index a = 0; a < rs; ++a) {
      const double la = coef * lambda[a];
      if (la == 0.0) continue;
      for (Index b = 0; b < p; ++b) grad[b] += la * units.jbar(i, a * p + b);
    }
  }
  return grad;
}

void full_sample_means(const DataMatrix& data, const MomentModel& model, const Vector& theta, Vector& gmean,
                       Matrix& jmean) {
  const Index N = data.rows();
  const Index r = model.moment_dim();
  const Index p = model.param_dim();
  gmean = Vector::Zero(r);
  jmean = Matrix::Zero(r, p);
  Vector g(r);
  Matrix jac(r, p);
  for (Index i = 0; i < N; ++i) {
    const std::span<const double> x(data.row(i).data(), static_cast<std::size_t>(data.cols()));
    model.moment(x, theta, g);
    model.jacobian(x, theta, jac);
    gmean += g;
    jmean += jac;
  }
  gmean /= static_cast<double>(N);
  jmean /= static_cast<double>(N);
}

namespace {

Matrix reduced_hessian_guess(const UnitMoments& units, const AffineSubspace& space, Index N, Index p) {
  const Index rs = units.z.cols();
  const Index n = units.z.rows();
  Matrix gmean = Matrix::Zero(rs, p);
  Matrix s = Matrix::Zero(rs, rs);
  for (Index i = 0; i < n; ++i) {
    for (Index a = 0; a < rs; ++a) {
      for (Index b = 0; b < p; ++b) gmean(a, b) += units.w[i] * units.jbar(i, a * p + b);
    }
  }
  s.noalias() = units.z.transpose() * units.w.asDiagonal() * units.z;
  const Eigen::LDLT<Matrix> ldlt(s);
  if (ldlt.info() != Eigen::Success) return Matrix();
  const Matrix gz = gmean * space.basis;
  const Matrix h = 2.0 * static_cast<double>(N) * gz.transpose() * ldlt.solve(gz);
  return h.allFinite() ? h : Matrix();
}

// Newton on the full-sample moment mean for just-identified models.
Vector solve_just_identified(const DataMatrix& data, const MomentModel& model, const MomentLayout& layout,
                             const AffineSubspace& space, int& iterations) {
  const Index k = space.dim();
  Vector u = Vector::Zero(k);
  Vector theta = space.to_theta(u);
  model.check_domain(theta);
  Vector gmean;
  Matrix jmean;
  auto residual = [&](const Vector& th, Vector& gs, Matrix& js) {
    full_sample_means(data, model, th, gmean, jmean);
    gs.resize(layout.stochastic_dim());
    js.resize(layout.stochastic_dim(), model.param_dim());
    for (Index a = 0; a < gs.size(); ++a) {
      gs[a] = gmean[layout.stochastic[static_cast<std::size_t>(a)]];
      js.row(a) = jmean.row(layout.stochastic[static_cast<std::size_t>(a)]);
    }
  };
  Vector gs;
  Matrix js;
  residual(theta, gs, js);
  iterations = 0;
  for (int it = 0; it < 100; ++it) {
    iterations = it + 1;
    if (gs.norm() == 0.0) break;
    const Matrix jz = js * space.basis;
    const Eigen::FullPivLU<Matrix> lu(jz);
    if (!lu.isInvertible()) throw SingularError("just-identified solve: singular moment Jacobian");
    const Vector step = lu.solve(gs);
    double t = 1.0;
    bool moved = false;
    Vector gs_new;
    Matrix js_new;
    for (int h = 0; h < 50; ++h, t *= 0.5) {
      const Vector cand = space.to_theta(u - t * step);
      if (!model.domain().contains(cand)) continue;
      residual(cand, gs_new, js_new);
      if (gs_new.norm() <= gs.norm() || h == 0) {
        // The full Newton step is always taken once; later halvings need a decrease.
        if (h == 0 && gs_new.norm() > gs.norm() && gs_new.norm() > 1e-12) continue;
        u -= t * step;
        theta = cand;
        gs = gs_new;
        js = js_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    if ((t * step).norm() <= 1e-14 * (1.0 + u.norm() + space.origin.norm())) break;
  }
  return theta;
}

}  // namespace

ProfileMinimum minimize_over(const UnitBuilder& build, const MomentModel& model, const MomentLayout& layout,
                             const AffineSubspace& space, Index N, const GelOptions& opts) {
  const Index p = model.param_dim();
  const Index r = model.moment_dim();
  Vector warm;
  ProfileFn fn = [&](const Vector& theta) -> std::optional<ProfilePoint> {
    if (!model.domain().contains(theta)) return std::nullopt;
    try {
      const UnitMoments units = build(theta, true);
      const LogRatio lr = log_ratio_from_units(units, layout, r, N, theta, opts, warm.size() ? &warm : nullptr);
      warm = lr.dual.lambda;
      // Per-observation scale: -2 log R / (2N), the same scale as the dual objective.
      ProfilePoint pt;
      pt.value = lr.dual.objective;
      pt.grad = gradient_from_units(units, stochastic_part(lr.dual.lambda, layout), N, p) / (2.0 * static_cast<double>(N));
      return pt;
    } catch (const InfeasibleError&) {
      return std::nullopt;
    } catch (const NonConvergence&) {
      return std::nullopt;
    } catch (const DomainError&) {
      return std::nullopt;
    }
  };
  Matrix guess;
  const Vector start = space.origin;
  if (model.domain().contains(start)) {
    try {
      guess = reduced_hessian_guess(build(start, true), space, N, p);
    } catch (const Error&) {
      guess = Matrix();
    }
  }
  if (guess.size()) guess /= 2.0 * static_cast<double>(N);
  ProfileMinimizeOptions mo;
  mo.grad_tol = opts.outer_tol;
  mo.max_iter = opts.max_outer;
  ProfileMinimum min = minimize_profile(fn, space, guess, mo);
  min.value *= 2.0 * static_cast<double>(N);
  return min;
}

GelFit estimate_with_units(const UnitBuilder& build, const DataMatrix& data, const MomentModel& model, Index n,
                           const std::optional<Vector>& theta_init, const GelOptions& opts) {
  const Index N = data.rows();
  const Index p = model.param_dim();
  const Index r = model.moment_dim();
  const MomentLayout layout(model);
  if (data.cols() != model.data_dim()) throw ArgumentError("data has wrong number of columns for the model");

  const Vector start = theta_init ? *theta_init : model.initial_estimate(data);
  if (start.size() != p) throw ArgumentError("theta_init has wrong length");
  model.check_domain(start);
  const AffineSubspace space = make_subspace(start, layout.constraint_coeffs, layout.constraint_values);

  GelFit fit;
  fit.N = N;
  fit.n = n;
  if (n < layout.stochastic_dim() + 1) {
    fit.warnings.push_back("number of groups n is below r + 1; the dual problem may be degenerate");
  }

  if (layout.stochastic_dim() == space.dim()) {
    fit.just_identified = true;
    fit.theta_hat = solve_just_identified(data, model, layout, space, fit.outer_iterations);
    fit.lambda_hat = Vector::Zero(r);
    fit.q_hat = Vector::Constant(n, 1.0 / static_cast<double>(N));
    fit.neg2logR_at_hat = 0.0;
    fit.converged = true;
  } else {
    const ProfileMinimum min = minimize_over(build, model, layout, space, N, opts);
    fit.theta_hat = min.theta;
    fit.outer_iterations = min.iterations;
    fit.converged = min.converged;
    fit.grad_norm = min.grad_norm;
    fit.simplex_restarts = min.simplex_restarts;
    const UnitMoments units = build(fit.theta_hat, false);
    const LogRatio lr = log_ratio_from_units(units, layout, r, N, fit.theta_hat, opts, nullptr);
    fit.lambda_hat = lr.dual.lambda;
    fit.neg2logR_at_hat = lr.neg2logR;
    fit.q_hat.resize(units.z.rows());
    const Vector u = (units.z * stochastic_part(lr.dual.lambda, layout)).array() + 1.0;
    for (Index i = 0; i < fit.q_hat.size(); ++i) fit.q_hat[i] = 1.0 / (static_cast<double>(N) * u[i]);
    if (!fit.converged) {
      std::ostringstream os;
      os << "outer optimization stopped after " << fit.outer_iterations << " iterations with gradient norm "
         << fit.grad_norm;
      if (!opts.allow_nonconverged) throw NonConvergence(os.str());
      fit.warnings.push_back(os.str());
    }
  }

  try {
    fit.cov_hat = asymptotic_covariance(data, model, fit.theta_hat);
    fit.wald_sd = (fit.cov_hat.diagonal() / static_cast<double>(N)).cwiseSqrt();
  } catch (const SingularError& e) {
    fit.cov_hat = Matrix::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    fit.wald_sd = Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
    fit.warnings.push_back(e.what());
  }
  return fit;
}

}  // namespace internal

using internal::MomentLayout;
using internal::UnitMoments;

namespace {

UnitMoments grouped_units(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                          const MomentLayout& layout, const Vector& theta, bool with_jacobian) {
  const Index n = grouping.n;
  const Index r = model.moment_dim();
  const Index p = model.param_dim();
  const Index rs = layout.stochastic_dim();
  UnitMoments units;
  units.z.resize(n, rs);
  units.w.resize(n);
  if (with_jacobian) units.jbar.resize(n, rs * p);
  Vector gsum(r);
  Matrix jsum(r, p);
  for (Index i = 0; i < n; ++i) {
    gsum.setZero();
    if (with_jacobian) jsum.setZero();
    const auto members = grouping.members(i);
    model.accumulate(data, members, theta, gsum, with_jacobian ? &jsum : nullptr);
    const double d = static_cast<double>(members.size());
    for (Index a = 0; a < rs; ++a) {
      const Index row = layout.stochastic[static_cast<std::size_t>(a)];
      units.z(i, a) = gsum[row] / d;
      if (with_jacobian) {
        for (Index b = 0; b < p; ++b) units.jbar(i, a * p + b) = jsum(row, b) / d;
      }
    }
    units.w[i] = d / static_cast<double>(grouping.N);
  }
  return units;
}

void check_grouping(const DataMatrix& data, const Grouping& grouping, const MomentModel& model) {
  if (grouping.N != data.rows()) throw ArgumentError("grouping size does not match the number of observations");
  if (data.cols() != model.data_dim()) throw ArgumentError("data has wrong number of columns for the model");
}

internal::UnitBuilder grouped_builder(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                                      const MomentLayout& layout) {
  return [&data, &grouping, &model, &layout](const Vector& theta, bool with_jacobian) {
    return grouped_units(data, grouping, model, layout, theta, with_jacobian);
  };
}

double chisq_quantile_checked(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level must be in (0, 1)");
  return chisq_quantile(level, 1);
}

}  // namespace

namespace internal {

UnitMoments grouped_unit_moments(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                                 const MomentLayout& layout, const Vector& theta, bool with_jacobian) {
  return grouped_units(data, grouping, model, layout, theta, with_jacobian);
}

}  // namespace internal

GroupedMoments group_moment_averages(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                                     const Vector& theta) {
  check_grouping(data, grouping, model);
  model.check_domain(theta);
  const Index r = model.moment_dim();
  GroupedMoments out;
  out.gbar.resize(grouping.n, r);
  out.group_weights.resize(grouping.n);
  Vector g(r), gsum(r);
  const std::size_t cols = static_cast<std::size_t>(data.cols());
  for (Index i = 0; i < grouping.n; ++i) {
    gsum.setZero();
    const auto members = grouping.members(i);
    for (Index obs : members) {
      model.moment(std::span<const double>(data.row(obs).data(), cols), theta, g);
      gsum += g;
    }
    out.gbar.row(i) = (gsum / static_cast<double>(members.size())).transpose();
    out.group_weights[i] = static_cast<double>(members.size()) / static_cast<double>(grouping.N);
  }
  return out;
}

LogRatio gel_log_ratio(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                       const Vector& theta, const GelOptions& opts, const Vector* warm_lambda) {
  check_grouping(data, grouping, model);
  model.check_domain(theta);
  const MomentLayout layout(model);
  const UnitMoments units = grouped_units(data, grouping, model, layout, theta, false);
  return internal::log_ratio_from_units(units, layout, model.moment_dim(), grouping.N, theta, opts, warm_lambda);
}

Vector profile_gradient(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                        const Vector& theta, const DualSolution& dual) {
  check_grouping(data, grouping, model);
  model.check_domain(theta);
  const MomentLayout layout(model);
  if (dual.lambda.size() != model.moment_dim()) throw ArgumentError("profile_gradient: lambda has wrong length");
  const UnitMoments units = grouped_units(data, grouping, model, layout, theta, true);
  return internal::gradient_from_units(units, internal::stochastic_part(dual.lambda, layout), grouping.N,
                                       model.param_dim());
}

GelFit gel_estimate(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                    const std::optional<Vector>& theta_init, const GelOptions& opts) {
  check_grouping(data, grouping, model);
  const MomentLayout layout(model);
  return internal::estimate_with_units(grouped_builder(data, grouping, model, layout), data, model, grouping.n,
                                       theta_init, opts);
}

TestResult gel_test(const DataMatrix& data, const Grouping& grouping, const MomentModel& model,
                    const Vector& theta0, const GelOptions& opts, TestCalibration calibration, const GelFit* fit) {
  check_grouping(data, grouping, model);
  model.check_domain(theta0);
  const MomentLayout layout(model);
  const Index free_dim = layout.free_dim(model.param_dim());
  const bool just_identified = layout.stochastic_dim() == free_dim;

  TestResult res;
  res.calibration = calibration;
  res.m_bar = grouping.mean_group_size();
  res.df = static_cast<int>(calibration == TestCalibration::profile ? free_dim : layout.stochastic_dim());
  try {
    res.raw_neg2logR = gel_log_ratio(data, grouping, model, theta0, opts).neg2logR;
  } catch (const InfeasibleError&) {
    res.infeasible = true;
    res.raw_neg2logR = std::numeric_limits<double>::infinity();
    res.statistic = std::numeric_limits<double>::infinity();
    res.p_value = 0.0;
    return res;
  }
  double baseline = 0.0;
  if (calibration == TestCalibration::profile && !just_identified) {
    if (fit != nullptr) {
      baseline = fit->neg2logR_at_hat;
    } else {
      baseline = gel_estimate(data, grouping, model, std::nullopt, opts).neg2logR_at_hat;
    }
  }
  res.min_neg2logR = baseline;
  res.statistic = std::max(0.0, res.raw_neg2logR - baseline) / res.m_bar;
  res.p_value = chisq_sf(res.statistic, res.df);
  return res;
}

std::pair<double, double> confidence_interval(const DataMatrix& data, const Grouping& grouping,
                                              const MomentModel& model, const GelFit& fit, Index component,
                                              double level, const GelOptions& opts) {
  check_grouping(data, grouping, model);
  const Index p = model.param_dim();
  if (component < 0 || component >= p) throw ArgumentError("confidence_interval: component out of range");
  if (fit.theta_hat.size() != p) throw ArgumentError("confidence_interval: fit does not match the model");
  const double threshold = chisq_quantile_checked(level) * grouping.mean_group_size();
  const MomentLayout layout(model);
  const auto build = grouped_builder(data, grouping, model, layout);
  const Index r = model.moment_dim();
  const Index N = grouping.N;
  const double floor_value = fit.neg2logR_at_hat;

  // Profile of the statistic with component fixed at t; +inf if infeasible.
  Vector last_theta = fit.theta_hat;
  auto excess = [&](double t) {
    Matrix C(layout.constraint_coeffs.rows() + 1, p);
    Vector v(C.rows());
    C.topRows(layout.constraint_coeffs.rows()) = layout.constraint_coeffs;
    v.head(layout.constraint_values.size()) = layout.constraint_values;
    C.bottomRows(1).setZero();
    C(C.rows() - 1, component) = 1.0;
    v[v.size() - 1] = t;
    Vector start = last_theta;
    start[component] = t;
    double value = std::numeric_limits<double>::infinity();
    try {
      const AffineSubspace space = make_subspace(start, C, v);
      if (!model.domain().contains(space.origin)) return value;
      if (space.dim() == 0) {
        const UnitMoments units = build(space.origin, false);
        value = internal::log_ratio_from_units(units, layout, r, N, space.origin, opts, nullptr).neg2logR;
      } else {
        const ProfileMinimum min = internal::minimize_over(build, model, layout, space, N, opts);
        value = min.value;
        last_theta = min.theta;
      }
    } catch (const InfeasibleError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const NonConvergence&) {
      return std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
    return value - floor_value - threshold;
  };

  const double centre = fit.theta_hat[component];
  double sd = fit.wald_sd.size() == p ? fit.wald_sd[component] : std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(sd) || !(sd > 0.0)) sd = 1e-3 * std::max(1.0, std::abs(centre));

  static constexpr double kMultiples[] = {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0};
  auto endpoint = [&](double direction) {
    last_theta = fit.theta_hat;
    double inside = centre;
    for (double k : kMultiples) {
      const double t = centre + direction * k * sd;
      if (excess(t) >= 0.0) {
        double lo = inside;
        double hi = t;
        for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-13 * std::max(1.0, std::abs(centre)); ++it) {
          const double mid = 0.5 * (lo + hi);
          (excess(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      }
      inside = t;
    }
    std::ostringstream os;
    os << "confidence_interval: no crossing within 20 Wald standard deviations for component " << component;
    throw BracketError(os.str());
  };
  const double lo = endpoint(-1.0);
  const double hi = endpoint(1.0);
  return {std::min(lo, centre), std::max(hi, centre)};
}

Matrix asymptotic_covariance(const DataMatrix& data, const MomentModel& model, const Vector& theta) {
  const Index N = data.rows();
  const Index p = model.param_dim();
  if (N <= p) throw ArgumentError("asymptotic_covariance: need N > p");
  if (data.cols() != model.data_dim()) throw ArgumentError("data has wrong number of columns for the model");
  model.check_domain(theta);
  const MomentLayout layout(model);
  const Index rs = layout.stochastic_dim();
  const Index r = model.moment_dim();

  Matrix G = Matrix::Zero(rs, p);
  Matrix S = Matrix::Zero(rs, rs);
  Vector g(r), gs(rs);
  Matrix jac(r, p);
  const std::size_t cols = static_cast<std::size_t>(data.cols());
  for (Index i = 0; i < N; ++i) {
    const std::span<const double> x(data.row(i).data(), cols);
    model.moment(x, theta, g);
    model.jacobian(x, theta, jac);
    for (Index a = 0; a < rs; ++a) {
      const Index row = layout.stochastic[static_cast<std::size_t>(a)];
      gs[a] = g[row];
      G.row(a) += jac.row(row);
    }
    S.selfadjointView<Eigen::Lower>().rankUpdate(gs);
  }
  G /= static_cast<double>(N);
  S = S.selfadjointView<Eigen::Lower>();
  S /= static_cast<double>(N);

  auto condition = [](const Matrix& m) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  };
  if (condition(S) > 1e12) throw SingularError("asymptotic_covariance: moment covariance S is singular");

  const AffineSubspace space = make_subspace(theta, layout.constraint_coeffs, layout.constraint_values);
  const Matrix& Z = space.basis;
  const Matrix gz = G * Z;
  const Eigen::LDLT<Matrix> sl(S);
  Matrix info = gz.transpose() * sl.solve(gz);
  info = 0.5 * (info + info.transpose());
  if (condition(info) > 1e12) throw SingularError("asymptotic_covariance: sandwich G'S^-1G is singular");
  const Matrix inv = info.ldlt().solve(Matrix::Identity(info.rows(), info.cols()));
  Matrix V = Z * inv * Z.transpose();
  return 0.5 * (V + V.transpose());
}

}  // namespace gelkit

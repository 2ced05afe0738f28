#include "gel_internal.hpp"
#include "gelkit/errors.hpp"
#include "gelkit/gel.hpp"

namespace gelkit {

namespace {

// One likelihood unit per observation, in data order.
internal::UnitMoments observation_units(const DataMatrix& data, const MomentModel& model,
                                        const internal::MomentLayout& layout, const Vector& theta,
                                        bool with_jacobian) {
  const Index N = data.rows();
  const Index r = model.moment_dim();
  const Index p = model.param_dim();
  const Index rs = layout.stochastic_dim();
  internal::UnitMoments units;
  units.z.resize(N, rs);
  units.w = Vector::Constant(N, 1.0 / static_cast<double>(N));
  if (with_jacobian) units.jbar.resize(N, rs * p);
  Vector g(r);
  Matrix jac(r, p);
  const std::size_t cols = static_cast<std::size_t>(data.cols());
  for (Index i = 0; i < N; ++i) {
    const std::span<const double> x(data.row(i).data(), cols);
    model.moment(x, theta, g);
    for (Index a = 0; a < rs; ++a) units.z(i, a) = g[layout.stochastic[static_cast<std::size_t>(a)]];
    if (with_jacobian) {
      model.jacobian(x, theta, jac);
      for (Index a = 0; a < rs; ++a) {
        const Index row = layout.stochastic[static_cast<std::size_t>(a)];
        for (Index b = 0; b < p; ++b) units.jbar(i, a * p + b) = jac(row, b);
      }
    }
  }
  return units;
}

}  // namespace

LogRatio el_log_ratio(const DataMatrix& data, const MomentModel& model, const Vector& theta, const GelOptions& opts,
                      const Vector* warm_lambda) {
  if (data.rows() < 1) throw ArgumentError("el_log_ratio: empty data");
  if (data.cols() != model.data_dim()) throw ArgumentError("data has wrong number of columns for the model");
  model.check_domain(theta);
  const internal::MomentLayout layout(model);
  const auto units = observation_units(data, model, layout, theta, false);
  return internal::log_ratio_from_units(units, layout, model.moment_dim(), data.rows(), theta, opts, warm_lambda);
}

GelFit el_estimate(const DataMatrix& data, const MomentModel& model, const std::optional<Vector>& theta_init,
                   const GelOptions& opts) {
  if (data.rows() < 1) throw ArgumentError("el_estimate: empty data");
  const internal::MomentLayout layout(model);
  internal::UnitBuilder build = [&](const Vector& theta, bool with_jacobian) {
    return observation_units(data, model, layout, theta, with_jacobian);
  };
  return internal::estimate_with_units(build, data, model, data.rows(), theta_init, opts);
}

}  // namespace gelkit

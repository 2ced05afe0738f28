#include "gelkit/moment_models.hpp"

#include "gelkit/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace gelkit {

ParameterDomain ParameterDomain::unbounded(Index p) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vector::Constant(p, -inf), Vector::Constant(p, inf)};
}

bool ParameterDomain::contains(const Vector& theta) const {
  if (theta.size() != lower.size()) return false;
  for (Index j = 0; j < theta.size(); ++j) {
    if (!std::isfinite(theta[j]) || !(theta[j] > lower[j]) || !(theta[j] < upper[j])) return false;
  }
  return true;
}

MomentModel::MomentModel(Index d, Index p, Index r, ParameterDomain domain)
    : data_dim_(d), param_dim_(p), moment_dim_(r), domain_(std::move(domain)) {
  if (d < 1 || p < 1 || r < p) {
    throw ArgumentError("moment model needs d >= 1, p >= 1 and r >= p");
  }
}

void MomentModel::check_domain(const Vector& theta) const {
  if (theta.size() != param_dim_) {
    std::ostringstream os;
    os << name() << ": theta has length " << theta.size() << ", expected " << param_dim_;
    throw DomainError(os.str());
  }
  if (!domain_.contains(theta)) {
    std::ostringstream os;
    os << name() << ": theta = (" << theta.transpose() << ") outside the parameter domain";
    throw DomainError(os.str());
  }
}

Vector MomentModel::eval_moment(std::span<const double> x, const Vector& theta) const {
  check_domain(theta);
  if (static_cast<Index>(x.size()) != data_dim_) throw ArgumentError("observation has wrong dimension");
  Vector out(moment_dim_);
  moment(x, theta, out);
  return out;
}

Matrix MomentModel::eval_jacobian(std::span<const double> x, const Vector& theta) const {
  check_domain(theta);
  if (static_cast<Index>(x.size()) != data_dim_) throw ArgumentError("observation has wrong dimension");
  Matrix out(moment_dim_, param_dim_);
  jacobian(x, theta, out);
  return out;
}

void MomentModel::jacobian(std::span<const double> x, const Vector& theta,
                           Eigen::Ref<Matrix> out) const {
  out = finite_difference_jacobian(*this, x, theta);
}

void MomentModel::accumulate(const DataMatrix& data, std::span<const Index> rows, const Vector& theta,
                             Eigen::Ref<Vector> g_sum, Matrix* jac_sum) const {
  Vector g(moment_dim_);
  Matrix jac(moment_dim_, param_dim_);
  const auto cols = static_cast<std::size_t>(data.cols());
  for (Index obs : rows) {
    const std::span<const double> x(data.row(obs).data(), cols);
    moment(x, theta, g);
    g_sum += g;
    if (jac_sum != nullptr) {
      jacobian(x, theta, jac);
      *jac_sum += jac;
    }
  }
}

Matrix finite_difference_jacobian(const MomentModel& model, std::span<const double> x,
                                  const Vector& theta) {
  const Index p = model.param_dim();
  const Index r = model.moment_dim();
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  Matrix jac(r, p);
  Vector plus(r), minus(r);
  Vector probe = theta;
  for (Index j = 0; j < p; ++j) {
    const double h = base * std::max(1.0, std::abs(theta[j]));
    probe[j] = theta[j] + h;
    const bool up_ok = model.domain().contains(probe);
    if (up_ok) model.moment(x, probe, plus);
    probe[j] = theta[j] - h;
    const bool down_ok = model.domain().contains(probe);
    if (down_ok) model.moment(x, probe, minus);
    probe[j] = theta[j];
    if (up_ok && down_ok) {
      jac.col(j) = (plus - minus) / (2.0 * h);
    } else {
      Vector centre(r);
      model.moment(x, theta, centre);
      if (up_ok) {
        jac.col(j) = (plus - centre) / h;
      } else if (down_ok) {
        jac.col(j) = (centre - minus) / h;
      } else {
        throw DomainError("finite differences: no admissible step around theta");
      }
    }
  }
  return jac;
}

namespace {

class MeanModel final : public MomentModel {
 public:
  explicit MeanModel(Index d) : MomentModel(d, d, d, ParameterDomain::unbounded(d)) {}

  std::string_view name() const override { return "mean"; }
  bool has_analytic_jacobian() const override { return true; }

  void moment(std::span<const double> x, const Vector& theta,
              Eigen::Ref<Vector> out) const override {
    for (Index k = 0; k < theta.size(); ++k) out[k] = x[static_cast<std::size_t>(k)] - theta[k];
  }

  void jacobian(std::span<const double>, const Vector& theta,
                Eigen::Ref<Matrix> out) const override {
    out.setZero();
    out.diagonal().setConstant(-1.0);
    (void)theta;
  }

  Vector initial_estimate(const DataMatrix& data) const override {
    return data.colwise().mean().transpose();
  }

  nlohmann::json config() const override {
    return {{"model", "mean"}, {"p", param_dim()}, {"constraint", nullptr}};
  }
};

class NormalThreeMomentModel final : public MomentModel {
 public:
  NormalThreeMomentModel() : MomentModel(1, 2, 3, make_domain()) {}

  std::string_view name() const override { return "normal3"; }
  bool has_analytic_jacobian() const override { return true; }

  void moment(std::span<const double> x, const Vector& theta,
              Eigen::Ref<Vector> out) const override {
    const double v = x[0];
    const double mu = theta[0];
    const double s2 = theta[1] * theta[1];
    const double c = v - mu;
    out[0] = mu - v;
    out[1] = s2 - c * c;
    out[2] = v * v * v - mu * (mu * mu + 3.0 * s2);
  }

  void jacobian(std::span<const double> x, const Vector& theta,
                Eigen::Ref<Matrix> out) const override {
    const double mu = theta[0];
    const double sigma = theta[1];
    out(0, 0) = 1.0;
    out(0, 1) = 0.0;
    out(1, 0) = 2.0 * (x[0] - mu);
    out(1, 1) = 2.0 * sigma;
    out(2, 0) = -3.0 * (mu * mu + sigma * sigma);
    out(2, 1) = -6.0 * mu * sigma;
  }

  void accumulate(const DataMatrix& data, std::span<const Index> rows, const Vector& theta,
                  Eigen::Ref<Vector> g_sum, Matrix* jac_sum) const override {
    const double mu = theta[0];
    const double sigma = theta[1];
    const double s2 = sigma * sigma;
    const double third = mu * (mu * mu + 3.0 * s2);
    double g0 = 0.0, g1 = 0.0, g2 = 0.0, dev = 0.0;
    for (Index obs : rows) {
      const double v = data(obs, 0);
      const double c = v - mu;
      g0 += mu - v;
      g1 += s2 - c * c;
      g2 += v * v * v - third;
      dev += 2.0 * c;
    }
    g_sum[0] += g0;
    g_sum[1] += g1;
    g_sum[2] += g2;
    if (jac_sum != nullptr) {
      const double k = static_cast<double>(rows.size());
      Matrix& j = *jac_sum;
      j(0, 0) += k;
      j(1, 0) += dev;
      j(1, 1) += k * 2.0 * sigma;
      j(2, 0) += k * -3.0 * (mu * mu + s2);
      j(2, 1) += k * -6.0 * mu * sigma;
    }
  }

  Vector initial_estimate(const DataMatrix& data) const override {
    const double mean = data.col(0).mean();
    const double n = static_cast<double>(data.rows());
    const double var = (data.col(0).array() - mean).square().sum() / std::max(1.0, n - 1.0);
    if (!(var > 0.0)) throw DomainError("normal3: data have zero spread, sigma > 0 cannot be estimated");
    Vector theta(2);
    theta << mean, std::sqrt(var);
    return theta;
  }

  nlohmann::json config() const override {
    return {{"model", "normal3"}, {"p", 2}, {"constraint", nullptr}};
  }

 private:
  static ParameterDomain make_domain() {
    auto dom = ParameterDomain::unbounded(2);
    dom.lower[1] = 0.0;
    return dom;
  }
};

class LinearRegressionModel final : public MomentModel {
 public:
  LinearRegressionModel(Index p, Vector coeffs, double value, bool constrained)
      : MomentModel(p + 1, p + 1, p + 1 + (constrained ? 1 : 0), ParameterDomain::unbounded(p + 1)),
        covariates_(p),
        coeffs_(std::move(coeffs)),
        value_(value),
        constrained_(constrained) {
    if (constrained_ && coeffs_.size() != p + 1) {
      throw ArgumentError("linreg constraint needs p + 1 coefficients (intercept first)");
    }
  }

  std::string_view name() const override { return "linreg"; }
  bool has_analytic_jacobian() const override { return true; }

  void moment(std::span<const double> x, const Vector& theta,
              Eigen::Ref<Vector> out) const override {
    double resid = x[0] - theta[0];
    for (Index j = 1; j <= covariates_; ++j) resid -= x[static_cast<std::size_t>(j)] * theta[j];
    out[0] = resid;
    for (Index j = 1; j <= covariates_; ++j) out[j] = x[static_cast<std::size_t>(j)] * resid;
    if (constrained_) out[covariates_ + 1] = coeffs_.dot(theta) - value_;
  }

  void jacobian(std::span<const double> x, const Vector&, Eigen::Ref<Matrix> out) const override {
    const Index k = covariates_ + 1;
    for (Index a = 0; a < k; ++a) {
      const double xa = a == 0 ? 1.0 : x[static_cast<std::size_t>(a)];
      for (Index b = 0; b < k; ++b) {
        const double xb = b == 0 ? 1.0 : x[static_cast<std::size_t>(b)];
        out(a, b) = -xa * xb;
      }
    }
    if (constrained_) out.row(k) = coeffs_.transpose();
  }

  std::optional<LinearConstraints> parameter_constraints() const override {
    if (!constrained_) return std::nullopt;
    LinearConstraints lc;
    lc.coeffs = coeffs_.transpose();
    lc.values = Vector::Constant(1, value_);
    lc.rows = {covariates_ + 1};
    return lc;
  }

  Vector initial_estimate(const DataMatrix& data) const override {
    Vector beta = ols_fit(data);
    if (!constrained_) return beta;
    // Least squares restricted to the constraint hyperplane.
    const Index k = covariates_ + 1;
    Matrix xtx = Matrix::Zero(k, k);
    Vector row(k);
    for (Index i = 0; i < data.rows(); ++i) {
      row[0] = 1.0;
      row.tail(covariates_) = data.row(i).tail(covariates_).transpose();
      xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
    }
    const Eigen::LDLT<Matrix> ldlt(xtx.selfadjointView<Eigen::Lower>());
    const Vector ac = ldlt.solve(coeffs_);
    const double denom = coeffs_.dot(ac);
    if (std::abs(denom) > 0.0) beta -= ac * ((coeffs_.dot(beta) - value_) / denom);
    return beta;
  }

  nlohmann::json config() const override {
    nlohmann::json cfg{{"model", "linreg"}, {"p", covariates_}};
    if (constrained_) {
      cfg["constraint"] = {{"coeffs", std::vector<double>(coeffs_.data(), coeffs_.data() + coeffs_.size())},
                           {"value", value_}};
    } else {
      cfg["constraint"] = nullptr;
    }
    return cfg;
  }

 private:
  Index covariates_;
  Vector coeffs_;
  double value_;
  bool constrained_;
};

}  // namespace

ModelPtr mean_model(Index d) {
  if (d < 1) throw ArgumentError("mean model needs d >= 1");
  return std::make_shared<MeanModel>(d);
}

ModelPtr normal_three_moment_model() { return std::make_shared<NormalThreeMomentModel>(); }

ModelPtr linreg_constrained_model(Index p, const Vector& constraint_coeffs, double constraint_value,
                                  bool use_constraint) {
  if (p < 1) throw ArgumentError("linreg needs p >= 1");
  return std::make_shared<LinearRegressionModel>(p, constraint_coeffs, constraint_value, use_constraint);
}

ModelPtr linreg_model(Index p) { return linreg_constrained_model(p, Vector(), 0.0, false); }

ModelPtr make_model(const nlohmann::json& config) {
  if (!config.is_object()) throw ArgumentError("model config must be a JSON object");
  for (const auto& [key, _] : config.items()) {
    if (key != "model" && key != "p" && key != "constraint") {
      throw ArgumentError("model config: unknown field '" + key + "'");
    }
  }
  if (!config.contains("model") || !config["model"].is_string()) {
    throw ArgumentError("model config: missing string field 'model'");
  }
  const std::string kind = config["model"].get<std::string>();
  auto get_p = [&](Index fallback) -> Index {
    if (!config.contains("p") || config["p"].is_null()) return fallback;
    if (!config["p"].is_number_integer()) throw ArgumentError("model config: 'p' must be an integer");
    return config["p"].get<Index>();
  };
  const bool has_constraint = config.contains("constraint") && !config["constraint"].is_null();
  if (kind == "mean") {
    if (has_constraint) throw ArgumentError("model config: 'mean' takes no constraint");
    return mean_model(get_p(1));
  }
  if (kind == "normal3") {
    if (has_constraint) throw ArgumentError("model config: 'normal3' takes no constraint");
    const Index p = get_p(2);
    if (p != 2) throw ArgumentError("model config: 'normal3' has p = 2");
    return normal_three_moment_model();
  }
  if (kind == "linreg") {
    const Index p = get_p(-1);
    if (p < 1) throw ArgumentError("model config: 'linreg' needs integer p >= 1");
    if (!has_constraint) return linreg_model(p);
    const auto& c = config["constraint"];
    if (!c.is_object() || !c.contains("coeffs") || !c.contains("value") || !c["coeffs"].is_array() ||
        !c["value"].is_number()) {
      throw ArgumentError("model config: constraint needs 'coeffs' array and numeric 'value'");
    }
    for (const auto& [key, _] : c.items()) {
      if (key != "coeffs" && key != "value") throw ArgumentError("model config: unknown constraint field '" + key + "'");
    }
    const auto coeffs = c["coeffs"].get<std::vector<double>>();
    Vector cv = Eigen::Map<const Vector>(coeffs.data(), static_cast<Index>(coeffs.size()));
    return linreg_constrained_model(p, cv, c["value"].get<double>(), true);
  }
  throw ArgumentError("model config: unknown model '" + kind + "'");
}

Vector ols_fit(const DataMatrix& data) {
  const Index k = data.cols();
  if (k < 2 || data.rows() < k) throw ArgumentError("ols_fit needs (y, x...) with at least p + 1 rows");
  Matrix xtx = Matrix::Zero(k, k);
  Vector xty = Vector::Zero(k);
  Vector row(k);
  for (Index i = 0; i < data.rows(); ++i) {
    row[0] = 1.0;
    row.tail(k - 1) = data.row(i).tail(k - 1).transpose();
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
    xty += row * data(i, 0);
  }
  const Eigen::LDLT<Matrix> ldlt(xtx.selfadjointView<Eigen::Lower>());
  if (ldlt.info() != Eigen::Success) throw SingularError("ols_fit: singular design");
  return ldlt.solve(xty);
}

}  // namespace gelkit

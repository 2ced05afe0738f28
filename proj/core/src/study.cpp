#include "gelkit/chisq.hpp"
#include "gelkit/distributed.hpp"
#include "gelkit/errors.hpp"
#include "gelkit/parallel.hpp"
#include "gelkit/random.hpp"
#include "gelkit/simulate.hpp"
#include "gelkit/two_sample.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace gelkit {

using nlohmann::json;

std::string MethodSpec::label() const {
  std::ostringstream os;
  if (name == "GEL" && two_sample) os << "GEL(m=" << m << ")";
  else if (name == "GEL") os << "GEL(n=" << n << ")";
  else if (name == "DCEL") os << "DCEL(k=" << k << ")";
  else if (name == "DGEL") os << "DGEL(K=" << K << ",n=" << n << ")";
  else os << name;
  return os.str();
}

namespace {

const std::set<std::string> kMethods = {"EL", "GEL", "DCEL", "DGEL", "WT"};

template <typename T>
T get_positive(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<T>();
  if (!(v > 0)) throw ArgumentError(std::string("config: '") + key + "' must be positive");
  return v;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError("config: " + where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ArgumentError("config: unknown key '" + key + "' in " + where);
  }
}

}  // namespace

SimConfig parse_sim_config(const json& j) {
  try {
    check_keys(j, {"study", "example", "N", "N1", "N2", "N_grid", "replications", "methods", "master_seed", "alpha",
                   "grid", "threads", "ex1", "ex2"},
               "study config");
    SimConfig c;
    c.study = j.value("study", c.study);
    if (c.study != "mse" && c.study != "size_power" && c.study != "timing") {
      throw ArgumentError("config: study must be mse, size_power or timing");
    }
    c.example = j.value("example", c.example);
    if (c.example == "custom") throw ArgumentError("config: example 'custom' is not supported; use ex1, ex2 or ex3");
    if (c.example != "ex1" && c.example != "ex2" && c.example != "ex3") {
      throw ArgumentError("config: example must be ex1, ex2 or ex3");
    }
    c.N = get_positive<Index>(j, "N", c.N);
    c.N1 = get_positive<Index>(j, "N1", c.N1);
    c.N2 = get_positive<Index>(j, "N2", c.N2);
    if (j.contains("N_grid")) {
      c.N_grid = j.at("N_grid").get<std::vector<Index>>();
      for (Index v : c.N_grid) {
        if (v < 1) throw ArgumentError("config: N_grid entries must be positive");
      }
    }
    c.replications = get_positive<int>(j, "replications", c.replications);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.alpha = j.value("alpha", c.alpha);
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ArgumentError("config: alpha must be in (0, 1]");
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<int>>();
    for (int g : c.grid) {
      if (g < 0) throw ArgumentError("config: grid entries must be >= 0");
    }
    c.threads = j.value("threads", c.threads);
    if (c.threads < 0) throw ArgumentError("config: threads must be >= 0");
    if (j.contains("ex1")) {
      const json& e = j.at("ex1");
      check_keys(e, {"mu", "sigma"}, "ex1");
      c.mu = e.value("mu", c.mu);
      c.sigma = get_positive<double>(e, "sigma", c.sigma);
    }
    if (j.contains("ex2")) {
      const json& e = j.at("ex2");
      check_keys(e, {"p", "rho", "alpha", "beta0"}, "ex2");
      c.p = get_positive<Index>(e, "p", c.p);
      c.rho = e.value("rho", c.rho);
      c.het = e.value("alpha", c.het);
      c.beta0 = e.value("beta0", c.beta0);
      if (c.p < 5) throw ArgumentError("config: ex2.p must be >= 5 (the constraint involves beta_1..beta_5)");
    }
    if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
      throw ArgumentError("config: 'methods' must be a non-empty array");
    }
    for (const json& mj : j.at("methods")) {
      check_keys(mj, {"name", "n", "k", "K", "m"}, "method");
      MethodSpec m;
      m.name = mj.at("name").get<std::string>();
      if (!kMethods.count(m.name)) throw ArgumentError("config: unknown method '" + m.name + "'");
      m.n = get_positive<Index>(mj, "n", m.n);
      m.k = get_positive<Index>(mj, "k", m.k);
      m.K = get_positive<Index>(mj, "K", m.K);
      m.m = get_positive<Index>(mj, "m", m.m);
      m.two_sample = c.example == "ex3";
      c.methods.push_back(m);
    }
    for (const auto& m : c.methods) {
      if (c.example == "ex3" && !(m.name == "WT" || m.name == "GEL" || m.name == "EL")) {
        throw ArgumentError("config: Example 3 supports methods EL (m = 1), GEL (group size m) and WT");
      }
      if (c.example != "ex3" && m.name == "WT") {
        throw ArgumentError("config: method WT needs two samples (example ex3)");
      }
      if (c.study == "mse" && c.example == "ex3") throw ArgumentError("config: the mse study needs ex1 or ex2");
      if (c.study == "size_power" && m.name == "DCEL") {
        throw ArgumentError("config: DCEL has no test statistic");
      }
    }
    if (c.study == "timing" && c.N_grid.empty()) c.N_grid = {c.N};
    if (c.example == "ex3" && c.grid.empty()) c.grid = {0};
    return c;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
}

json to_json(const SimConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods) {
    json mj = {{"name", m.name}};
    if (m.name == "GEL" && m.two_sample) mj["m"] = m.m;
    else if (m.name == "GEL") mj["n"] = m.n;
    if (m.name == "DCEL") mj["k"] = m.k;
    if (m.name == "DGEL") {
      mj["K"] = m.K;
      mj["n"] = m.n;
    }
    methods.push_back(mj);
  }
  json j = {{"study", c.study},
            {"example", c.example},
            {"replications", c.replications},
            {"methods", methods},
            {"master_seed", c.master_seed},
            {"alpha", c.alpha},
            {"threads", c.threads}};
  if (c.example == "ex3") {
    j["N1"] = c.N1;
    j["N2"] = c.N2;
    j["grid"] = c.grid;
  } else {
    j["N"] = c.N;
  }
  if (c.study == "timing") j["N_grid"] = c.N_grid;
  if (c.example == "ex1") j["ex1"] = {{"mu", c.mu}, {"sigma", c.sigma}};
  if (c.example == "ex2") j["ex2"] = {{"p", c.p}, {"rho", c.rho}, {"alpha", c.het}, {"beta0", c.beta0}};
  return j;
}

namespace {

json vec_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string vec_csv(const Vector& v) {
  std::ostringstream os;
  os.precision(10);
  for (Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct Problem {
  ModelPtr model;
  Vector truth;
};

Problem make_problem(const SimConfig& c) {
  if (c.example == "ex1") return {normal_three_moment_model(), (Vector(2) << c.mu, c.sigma).finished()};
  if (c.example == "ex2") {
    Vector coeffs = Vector::Zero(c.p + 1);
    coeffs.segment(1, 5).setOnes();
    Vector truth(c.p + 1);
    truth[0] = c.beta0;
    for (Index j = 0; j < c.p; ++j) truth[j + 1] = static_cast<double>(j + 1);
    return {linreg_constrained_model(c.p, coeffs, 15.0, true), truth};
  }
  return {mean_model(1), Vector::Zero(1)};
}

DataMatrix generate(const SimConfig& c, Index N, std::uint64_t seed) {
  if (c.example == "ex1") return gen_example1(N, c.mu, c.sigma, seed);
  Vector beta(c.p);
  for (Index j = 0; j < c.p; ++j) beta[j] = static_cast<double>(j + 1);
  return gen_example2(N, c.p, c.rho, c.het, c.beta0, beta, seed);
}

using Clock = std::chrono::steady_clock;

struct FitOutcome {
  Vector theta;
  Vector cov_diag;
  double seconds = 0;
};

// Point estimate of one method; grouping streams are keyed by method index.
FitOutcome fit_method(const MethodSpec& m, const DataMatrix& data, const MomentModel& model, std::uint64_t seed) {
  FitOutcome out;
  const auto t0 = Clock::now();
  if (m.name == "EL") {
    const GelFit f = el_estimate(data, model);
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out.theta = f.theta_hat;
    out.cov_diag = f.cov_hat.diagonal();
  } else if (m.name == "GEL") {
    const GelFit f = gel_estimate(data, make_grouping(data.rows(), std::min(m.n, data.rows()), seed), model);
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out.theta = f.theta_hat;
    out.cov_diag = f.cov_hat.diagonal();
  } else if (m.name == "DCEL") {
    out.theta = dcel_estimate(data, m.k, model, seed);
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  } else if (m.name == "DGEL") {
    DgelOptions opts;
    opts.threads = 1;
    out.theta = dgel_estimate(partition_shards(data, m.K, seed, m.n), model, opts).theta_dgel;
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  } else {
    throw ArgumentError("method " + m.name + " has no point estimate");
  }
  return out;
}

struct RepResult {
  std::vector<bool> ok;
  std::vector<FitOutcome> fits;
  std::vector<bool> reject;
  std::vector<std::string> errors;
};

void record_failure(RepResult& r, std::size_t k, const std::exception& e) {
  r.ok[k] = false;
  r.errors[k] = e.what();
}

// Drops failed replications per method; aborts when 1% or more fail.
void check_failures(const std::vector<RepResult>& reps, std::size_t k, const std::string& label, int grid,
                    SimReport& report, MethodSummary& row) {
  row.failures = 0;
  std::string first;
  for (const auto& r : reps) {
    if (!r.ok[k]) {
      if (first.empty()) first = r.errors[k];
      ++row.failures;
    }
  }
  row.reps_ok = static_cast<int>(reps.size()) - row.failures;
  if (row.failures == 0) return;
  std::ostringstream os;
  os << label << (grid >= 0 ? " (j=" + std::to_string(grid) + ")" : "") << ": " << row.failures << " of "
     << reps.size() << " replications failed (first: " << first << ")";
  if (static_cast<double>(row.failures) >= 0.01 * static_cast<double>(reps.size())) {
    throw NonConvergence("study aborted: " + os.str());
  }
  report.warnings.push_back(os.str() + "; excluded");
}

int width(const SimConfig& c) { return c.threads > 0 ? c.threads : default_threads(); }

}  // namespace

nlohmann::json SimReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json j = {{"method", r.method},     {"label", r.label},         {"N", r.N},
              {"reps_ok", r.reps_ok},   {"failures", r.failures},   {"time_mean_s", r.time_mean_s},
              {"time_median_s", r.time_median_s}};
    j["grid"] = r.grid >= 0 ? json(r.grid) : json(nullptr);
    j["mse"] = r.mse.size() ? vec_json(r.mse) : json(nullptr);
    j["mse_sd"] = r.mse_sd.size() ? vec_json(r.mse_sd) : json(nullptr);
    j["cov_diag_mean"] = r.cov_diag_mean.size() ? vec_json(r.cov_diag_mean) : json(nullptr);
    j["reject_rate"] = r.reject_rate >= 0 ? json(r.reject_rate) : json(nullptr);
    j["reject_se"] = r.reject_se >= 0 ? json(r.reject_se) : json(nullptr);
    rows_json.push_back(j);
  }
  return {{"study", study},
          {"example", example},
          {"rows", rows_json},
          {"loglog_slopes", loglog_slopes},
          {"warnings", warnings}};
}

std::string SimReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "study,method,label,N,grid,reps_ok,failures,mse,mse_sd,time_mean_s,time_median_s,reject_rate,reject_se\n";
  for (const auto& r : rows) {
    os << study << ',' << r.method << ',' << '"' << r.label << '"' << ',' << r.N << ',';
    if (r.grid >= 0) os << r.grid;
    os << ',' << r.reps_ok << ',' << r.failures << ',' << vec_csv(r.mse) << ',' << vec_csv(r.mse_sd) << ','
       << r.time_mean_s << ',' << r.time_median_s << ',';
    if (r.reject_rate >= 0) os << r.reject_rate;
    os << ',';
    if (r.reject_se >= 0) os << r.reject_se;
    os << '\n';
  }
  return os.str();
}

SimReport run_mse_study(const SimConfig& c) {
  if (c.example == "ex3") throw ArgumentError("mse study: Example 3 has no estimation target");
  const Problem prob = make_problem(c);
  const std::size_t M = c.methods.size();
  std::vector<RepResult> reps(static_cast<std::size_t>(c.replications));
  parallel_for(c.replications, width(c), [&](long rep) {
    const std::uint64_t seed = splitmix(c.master_seed, static_cast<std::uint64_t>(rep));
    const DataMatrix data = generate(c, c.N, splitmix(seed, 0));
    RepResult& r = reps[static_cast<std::size_t>(rep)];
    r.ok.assign(M, true);
    r.fits.resize(M);
    r.errors.resize(M);
    for (std::size_t k = 0; k < M; ++k) {
      try {
        r.fits[k] = fit_method(c.methods[k], data, *prob.model, splitmix(seed, k + 1));
      } catch (const Error& e) {
        record_failure(r, k, e);
      }
    }
  });

  SimReport report;
  report.study = "mse";
  report.example = c.example;
  const Index p = prob.truth.size();
  for (std::size_t k = 0; k < M; ++k) {
    MethodSummary row;
    row.method = c.methods[k].name;
    row.label = c.methods[k].label();
    row.N = c.N;
    check_failures(reps, k, row.label, -1, report, row);
    Vector sum = Vector::Zero(p), sumsq = Vector::Zero(p), cov = Vector::Zero(p);
    bool have_cov = true;
    std::vector<double> times;
    for (const auto& r : reps) {
      if (!r.ok[k]) continue;
      const Vector se = (r.fits[k].theta - prob.truth).array().square();
      sum += se;
      sumsq += se.cwiseProduct(se);
      if (r.fits[k].cov_diag.size() == p) cov += r.fits[k].cov_diag;
      else have_cov = false;
      times.push_back(r.fits[k].seconds);
    }
    const double R = row.reps_ok;
    row.mse = sum / R;
    if (R > 1) {
      row.mse_sd = ((sumsq - R * row.mse.cwiseProduct(row.mse)) / (R - 1)).cwiseMax(0.0).cwiseSqrt();
    } else {
      row.mse_sd = Vector::Zero(p);
    }
    if (have_cov) row.cov_diag_mean = cov / R;
    double tsum = 0;
    for (double t : times) tsum += t;
    row.time_mean_s = tsum / R;
    row.time_median_s = median(times);
    report.rows.push_back(row);
  }
  return report;
}

SimReport run_size_power_study(const SimConfig& c) {
  if (c.example == "ex2") throw ArgumentError("size_power study: use ex1 or ex3");
  const Problem prob = make_problem(c);
  const std::size_t M = c.methods.size();
  const std::vector<int> grid = c.example == "ex3" ? c.grid : std::vector<int>{-1};
  SimReport report;
  report.study = "size_power";
  report.example = c.example;

  for (int g : grid) {
    std::vector<RepResult> reps(static_cast<std::size_t>(c.replications));
    parallel_for(c.replications, width(c), [&](long rep) {
      const std::uint64_t seed = splitmix(c.master_seed, static_cast<std::uint64_t>(rep));
      RepResult& r = reps[static_cast<std::size_t>(rep)];
      r.ok.assign(M, true);
      r.fits.resize(M);
      r.errors.resize(M);
      r.reject.assign(M, false);
      if (c.example == "ex1") {
        const DataMatrix data = generate(c, c.N, splitmix(seed, 0));
        for (std::size_t k = 0; k < M; ++k) {
          const MethodSpec& m = c.methods[k];
          const std::uint64_t ms = splitmix(seed, k + 1);
          try {
            const auto t0 = Clock::now();
            double pval = 1.0;
            if (m.name == "EL") {
              pval = gel_test(data, singleton_grouping(data.rows()), *prob.model, prob.truth).p_value;
            } else if (m.name == "GEL") {
              pval = gel_test(data, make_grouping(data.rows(), std::min(m.n, data.rows()), ms), *prob.model,
                              prob.truth)
                         .p_value;
            } else if (m.name == "DGEL") {
              DgelOptions opts;
              opts.threads = 1;
              pval = dgel_test(partition_shards(data, m.K, ms, m.n), *prob.model, prob.truth, opts).p_value;
            }
            r.fits[k].seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            r.reject[k] = pval <= c.alpha;
          } catch (const Error& e) {
            record_failure(r, k, e);
          }
        }
      } else {
        const TwoSamples s = gen_example3(c.N1, c.N2, g, splitmix(seed, 0));
        const Vector zero = Vector::Zero(1);
        for (std::size_t k = 0; k < M; ++k) {
          const MethodSpec& m = c.methods[k];
          try {
            const auto t0 = Clock::now();
            double pval = 1.0;
            if (m.name == "WT") {
              pval = welch_t_test(s.x, s.y).p_value;
            } else {
              const Index mm = m.name == "EL" ? 1 : m.m;
              const auto problem = make_two_sample_problem(s.x, s.y, prob.model, mm, splitmix(seed, k + 1));
              pval = two_sample_test(problem, zero).p_value;
            }
            r.fits[k].seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            r.reject[k] = pval <= c.alpha;
          } catch (const Error& e) {
            record_failure(r, k, e);
          }
        }
      }
    });
    for (std::size_t k = 0; k < M; ++k) {
      MethodSummary row;
      row.method = c.methods[k].name;
      row.label = c.methods[k].label();
      row.N = c.example == "ex3" ? c.N1 + c.N2 : c.N;
      row.grid = g;
      check_failures(reps, k, row.label, g, report, row);
      int rejections = 0;
      std::vector<double> times;
      for (const auto& r : reps) {
        if (!r.ok[k]) continue;
        rejections += r.reject[k] ? 1 : 0;
        times.push_back(r.fits[k].seconds);
      }
      const double R = row.reps_ok;
      row.reject_rate = rejections / R;
      row.reject_se = std::sqrt(row.reject_rate * (1.0 - row.reject_rate) / R);
      double tsum = 0;
      for (double t : times) tsum += t;
      row.time_mean_s = tsum / R;
      row.time_median_s = median(times);
      report.rows.push_back(row);
    }
  }
  return report;
}

SimReport run_timing_bench(const SimConfig& c) {
  if (c.example == "ex3") throw ArgumentError("timing: use ex1 or ex2");
  const Problem prob = make_problem(c);
  SimReport report;
  report.study = "timing";
  report.example = c.example;
  const std::vector<Index> Ns = c.N_grid.empty() ? std::vector<Index>{c.N} : c.N_grid;
  for (Index N : Ns) {
    std::vector<DataMatrix> datasets;
    for (int rep = 0; rep < c.replications; ++rep) {
      datasets.push_back(generate(c, N, splitmix(splitmix(c.master_seed, static_cast<std::uint64_t>(rep)), 0)));
    }
    for (std::size_t k = 0; k < c.methods.size(); ++k) {
      MethodSummary row;
      row.method = c.methods[k].name;
      row.label = c.methods[k].label();
      row.N = N;
      std::vector<double> times;
      for (int rep = 0; rep < c.replications; ++rep) {
        const std::uint64_t seed = splitmix(c.master_seed, static_cast<std::uint64_t>(rep));
        try {
          times.push_back(fit_method(c.methods[k], datasets[static_cast<std::size_t>(rep)], *prob.model,
                                     splitmix(seed, k + 1))
                              .seconds);
        } catch (const Error& e) {
          ++row.failures;
          report.warnings.push_back(row.label + " N=" + std::to_string(N) + ": " + e.what());
        }
      }
      row.reps_ok = static_cast<int>(times.size());
      double tsum = 0;
      for (double t : times) tsum += t;
      row.time_mean_s = times.empty() ? 0.0 : tsum / static_cast<double>(times.size());
      row.time_median_s = median(times);
      report.rows.push_back(row);
    }
  }
  if (Ns.size() >= 2) {
    for (const auto& m : c.methods) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int cnt = 0;
      for (const auto& r : report.rows) {
        if (r.label != m.label() || r.time_median_s <= 0.0) continue;
        const double x = std::log(static_cast<double>(r.N));
        const double y = std::log(r.time_median_s);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
      }
      if (cnt >= 2) report.loglog_slopes[m.label()] = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    }
  }
  return report;
}

SimReport run_study(const SimConfig& c) {
  if (c.study == "mse") return run_mse_study(c);
  if (c.study == "size_power") return run_size_power_study(c);
  return run_timing_bench(c);
}

}  // namespace gelkit

#include "gelkit_cli/cli.hpp"

#include "gelkit_cli/csv.hpp"

#include <gelkit/distributed.hpp>
#include <gelkit/errors.hpp>
#include <gelkit/gel.hpp>
#include <gelkit/random.hpp>
#include <gelkit/simulate.hpp>
#include <gelkit/two_sample.hpp>
#include <gelkit/version.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unistd.h>

namespace gelkit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string data;
  bool header = false;
  std::string columns;
  std::string model = "mean";
  Index groups = 0;
  Index group_size = 0;
  std::uint64_t seed = 0;
  std::vector<double> theta0;
  double tol = 1e-8;
  double inner_tol = 1e-12;
  int max_outer = 200;
  std::string out;
};

struct Options {
  Common c;
  // estimate
  double ci = 0;
  bool el = false;
  Index train_rows = 0;
  // test
  std::string calibration = "profile";
  // two-sample
  std::string data_x, data_y;
  std::vector<double> pi0;
  bool trim = false;
  // dgel
  Index shards = 0;
  int threads = 0;
  bool size_weighted = false;
  bool lenient = false;
  // simulate / bench
  std::string config;
};

// Thrown for bad flag combinations detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json vec(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) a.push_back(v[i]);
    else a.push_back(nullptr);
  }
  return a;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = v[i];
  return out;
}

std::vector<Index> parse_columns(const std::string& s) {
  std::vector<Index> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v - 1);
    } catch (const std::exception&) {
      throw UsageError("--columns expects 1-based integers, got '" + item + "'");
    }
  }
  return out;
}

json load_json_arg(const std::string& spec) {
  if (!spec.empty() && spec.front() == '{') return json::parse(spec);
  std::ifstream in(spec);
  if (!in) throw IoError("cannot open '" + spec + "'");
  return json::parse(in);
}

// --model accepts a model name, an inline JSON object or a JSON file path.
json resolve_model_config(const std::string& spec, Index data_cols) {
  json cfg;
  if (spec == "mean" || spec == "normal3" || spec == "linreg") {
    cfg = {{"model", spec}};
  } else {
    if (spec.empty() || (spec.front() != '{' && !std::filesystem::exists(spec))) {
      throw ArgumentError("--model: unknown model '" + spec + "' (expected mean, normal3, linreg, a JSON object or a file)");
    }
    try {
      cfg = load_json_arg(spec);
    } catch (const json::exception& e) {
      throw ArgumentError(std::string("--model: ") + e.what());
    }
  }
  if (!cfg.is_object()) throw ArgumentError("--model must be a JSON object or a model name");
  if (!cfg.contains("p") && cfg.contains("model") && cfg["model"].is_string()) {
    const std::string name = cfg["model"].get<std::string>();
    if (name == "mean") cfg["p"] = data_cols;
    if (name == "normal3") cfg["p"] = 2;
    if (name == "linreg") cfg["p"] = data_cols - 1;
  }
  return cfg;
}

GelOptions gel_options(const Common& c) {
  GelOptions o;
  o.outer_tol = c.tol;
  o.inner.tol = c.inner_tol;
  o.max_outer = c.max_outer;
  o.allow_nonconverged = true;
  return o;
}

Grouping choose_grouping(const Common& c, Index N, bool el, json& echo) {
  if (c.groups > 0 && c.group_size > 0) throw UsageError("--groups and --group-size are mutually exclusive");
  Index n = std::min<Index>(N, 100);
  if (el) n = N;
  else if (c.groups > 0) n = c.groups;
  else if (c.group_size > 0) n = std::max<Index>(1, N / c.group_size);
  if (n > N) throw ArgumentError("number of groups exceeds the number of observations");
  echo["groups"] = n;
  echo["grouping_seed"] = c.seed;
  return n == N ? singleton_grouping(N) : make_grouping(N, n, c.seed);
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

struct Report {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  json result = nullptr;
  json diagnostics = json::object();
};

json fit_json(const GelFit& f) {
  return {{"theta_hat", vec(f.theta_hat)},
          {"wald_sd", vec(f.wald_sd)},
          {"lambda_hat", vec(f.lambda_hat)},
          {"lambda_norm", num(f.lambda_hat.norm())},
          {"neg2logR_at_hat", num(f.neg2logR_at_hat)},
          {"N", f.N},
          {"n", f.n},
          {"m_bar", static_cast<double>(f.N) / static_cast<double>(f.n)},
          {"just_identified", f.just_identified}};
}

json fit_diagnostics(const GelFit& f) {
  return {{"outer_iterations", f.outer_iterations},
          {"converged", f.converged},
          {"grad_norm", num(f.grad_norm)},
          {"simplex_restarts", f.simplex_restarts},
          {"warnings", f.warnings},
          {"infeasible", false}};
}

json test_json(const TestResult& t) {
  return {{"statistic", num(t.statistic)},
          {"df", t.df},
          {"p_value", t.p_value},
          {"raw_neg2logR", num(t.raw_neg2logR)},
          {"min_neg2logR", num(t.min_neg2logR)},
          {"m_bar", t.m_bar},
          {"infeasible", t.infeasible},
          {"calibration", t.calibration == TestCalibration::profile ? "profile" : "raw"}};
}

struct LoadedData {
  DataMatrix data;
  ModelPtr model;
};

LoadedData load(const Common& c, Report& rep) {
  LoadedData d;
  d.data = read_csv(c.data, c.header, parse_columns(c.columns));
  const json mcfg = resolve_model_config(c.model, d.data.cols());
  d.model = make_model(mcfg);
  rep.config["data"] = c.data;
  rep.config["header"] = c.header;
  rep.config["columns"] = c.columns.empty() ? json(nullptr) : json(c.columns);
  rep.config["model"] = mcfg;
  rep.config["N"] = d.data.rows();
  return d;
}

int cmd_estimate(const Options& o, Report& rep) {
  const Common& c = o.c;
  LoadedData d = load(c, rep);
  DataMatrix train = d.data;
  DataMatrix test;
  if (o.train_rows > 0) {
    if (o.train_rows >= d.data.rows()) throw ArgumentError("--train-rows must leave at least one test row");
    train = d.data.topRows(o.train_rows);
    test = d.data.bottomRows(d.data.rows() - o.train_rows);
  }
  rep.config["train_rows"] = o.train_rows > 0 ? json(o.train_rows) : json(nullptr);
  rep.config["el"] = o.el;
  rep.config["tol"] = c.tol;
  rep.config["inner_tol"] = c.inner_tol;
  rep.config["max_outer"] = c.max_outer;
  rep.config["ci"] = o.ci > 0 ? json(o.ci) : json(nullptr);
  rep.config["theta0"] = c.theta0.empty() ? json(nullptr) : json(c.theta0);
  const Grouping g = choose_grouping(c, train.rows(), o.el, rep.config);
  const GelOptions opts = gel_options(c);
  std::optional<Vector> init;
  if (!c.theta0.empty()) init = to_vector(c.theta0);
  const GelFit fit = gel_estimate(train, g, *d.model, init, opts);
  rep.result = fit_json(fit);
  rep.diagnostics = fit_diagnostics(fit);
  json cis = nullptr;
  if (o.ci > 0) {
    cis = json::array();
    for (Index k = 0; k < d.model->param_dim(); ++k) {
      try {
        const auto [lo, hi] = confidence_interval(train, g, *d.model, fit, k, o.ci, opts);
        cis.push_back({{"component", k}, {"level", o.ci}, {"lo", lo}, {"hi", hi}, {"error", nullptr}});
      } catch (const BracketError& e) {
        cis.push_back({{"component", k}, {"level", o.ci}, {"lo", nullptr}, {"hi", nullptr}, {"error", e.what()}});
      }
    }
  }
  rep.result["ci"] = cis;
  json mspe = nullptr;
  if (test.rows() > 0) {
    if (d.model->name() != "linreg") throw ArgumentError("--train-rows needs a linreg model");
    const Mspe m = mspe_eval(fit.theta_hat, test);
    mspe = {{"test_rows", test.rows()}, {"mspe", m.mspe}, {"sd", m.sd}};
  }
  rep.result["mspe"] = mspe;
  return fit.converged ? kOk : kNonConvergence;
}

int cmd_test(const Options& o, Report& rep) {
  const Common& c = o.c;
  if (c.theta0.empty()) throw UsageError("test requires --theta0");
  if (o.calibration != "profile" && o.calibration != "raw") throw UsageError("--calibration must be profile or raw");
  LoadedData d = load(c, rep);
  rep.config["theta0"] = c.theta0;
  rep.config["calibration"] = o.calibration;
  rep.config["tol"] = c.tol;
  rep.config["inner_tol"] = c.inner_tol;
  rep.config["max_outer"] = c.max_outer;
  const Grouping g = choose_grouping(c, d.data.rows(), false, rep.config);
  const GelOptions opts = gel_options(c);
  const Vector theta0 = to_vector(c.theta0);
  if (theta0.size() != d.model->param_dim()) throw ArgumentError("--theta0 has the wrong length for the model");
  const auto cal = o.calibration == "raw" ? TestCalibration::raw : TestCalibration::profile;
  std::optional<GelFit> fit;
  try {
    fit = gel_estimate(d.data, g, *d.model, std::nullopt, opts);
  } catch (const InfeasibleError&) {
  }
  const TestResult t = gel_test(d.data, g, *d.model, theta0, opts, cal, fit ? &*fit : nullptr);
  rep.result = test_json(t);
  rep.result["theta0"] = c.theta0;
  rep.result["theta_hat"] = fit ? vec(fit->theta_hat) : json(nullptr);
  rep.diagnostics = fit ? fit_diagnostics(*fit) : json{{"warnings", json::array()}};
  rep.diagnostics["infeasible"] = t.infeasible;
  return fit && !fit->converged && cal == TestCalibration::profile && !t.infeasible ? kNonConvergence : kOk;
}

int cmd_two_sample(const Options& o, Report& rep) {
  const Common& c = o.c;
  const auto cols = parse_columns(c.columns);
  DataMatrix X = read_csv(o.data_x, c.header, cols);
  DataMatrix Y = read_csv(o.data_y, c.header, cols);
  const json mcfg = resolve_model_config(c.model, X.cols());
  ModelPtr model = make_model(mcfg);
  rep.config = {{"data_x", o.data_x}, {"data_y", o.data_y},   {"header", c.header},
                {"model", mcfg},      {"group_size", c.group_size}, {"pi0", o.pi0},
                {"trim", o.trim},     {"grouping_seed_x", c.seed},  {"grouping_seed_y", splitmix(c.seed, 1)},
                {"N1", X.rows()},     {"N2", Y.rows()}};
  if (c.group_size < 1) throw UsageError("two-sample requires --group-size m");
  const TwoSampleProblem prob = make_two_sample_problem(std::move(X), std::move(Y), model, c.group_size, c.seed, o.trim);
  TwoSampleOptions opts;
  opts.gel = gel_options(c);
  opts.gel.allow_nonconverged = false;
  const Vector pi0 = to_vector(o.pi0);
  if (pi0.size() != model->param_dim()) throw ArgumentError("--pi0 has the wrong length for the model");
  const TwoSampleFit f = two_sample_test(prob, pi0, opts);
  rep.result = {{"theta_x_star", vec(f.theta_x_star)},
                {"theta_y_star", vec(f.theta_y_star)},
                {"lambda_star", vec(f.lambda_star)},
                {"neg2logR", num(f.neg2logR)},
                {"statistic", num(f.statistic)},
                {"df", f.df},
                {"p_value", f.p_value},
                {"infeasible", f.infeasible},
                {"m", prob.m},
                {"n1", prob.n1()},
                {"n2", prob.n2()},
                {"trimmed_x", prob.trimmed_x},
                {"trimmed_y", prob.trimmed_y}};
  rep.diagnostics = {{"converged", f.converged || f.infeasible},
                     {"iterations", f.iterations},
                     {"method", f.method.empty() ? json(nullptr) : json(f.method)},
                     {"infeasible", f.infeasible},
                     {"warnings", json::array()}};
  return kOk;
}

int cmd_dgel(const Options& o, Report& rep) {
  const Common& c = o.c;
  if (o.shards < 1) throw UsageError("dgel requires --shards K");
  if (c.group_size > 0) throw UsageError("dgel takes --groups (per shard), not --group-size");
  LoadedData d = load(c, rep);
  const Index n = c.groups > 0 ? c.groups : 100;
  const auto shards = partition_shards(d.data, o.shards, c.seed, n);
  DgelOptions opts;
  opts.gel = gel_options(c);
  opts.gel.allow_nonconverged = false;
  opts.strict = !o.lenient;
  opts.size_weighted = o.size_weighted;
  opts.threads = o.threads;
  json shard_seeds = json::array();
  json shard_sizes = json::array();
  for (const auto& s : shards) {
    shard_seeds.push_back(s.seed);
    shard_sizes.push_back(s.data.rows());
  }
  rep.config["shards"] = o.shards;
  rep.config["groups_per_shard"] = n;
  rep.config["master_seed"] = c.seed;
  rep.config["shard_seeds"] = shard_seeds;
  rep.config["size_weighted"] = o.size_weighted;
  rep.config["strict"] = !o.lenient;
  rep.config["theta0"] = c.theta0.empty() ? json(nullptr) : json(c.theta0);
  const DgelFit est = dgel_estimate(shards, *d.model, opts);
  json local = json::array();
  for (const auto& f : est.local_fits) local.push_back(vec(f.theta_hat));
  rep.result = {{"theta_dgel", vec(est.theta_dgel)}, {"local_theta", local}, {"shard_sizes", shard_sizes},
                {"failed_shards", est.failed_shards}, {"test", nullptr}};
  rep.diagnostics = {{"warnings", est.warnings}, {"infeasible", false}};
  if (!c.theta0.empty()) {
    const Vector theta0 = to_vector(c.theta0);
    if (theta0.size() != d.model->param_dim()) throw ArgumentError("--theta0 has the wrong length for the model");
    const DgelFit t = dgel_test(shards, *d.model, theta0, opts);
    rep.result["test"] = {{"statistic", num(t.statistic)},  {"df", t.df},
                          {"p_value", t.p_value},           {"agg_neg2logR", num(t.agg_neg2logR)},
                          {"m_bar", t.m_bar},               {"infeasible", t.infeasible},
                          {"calibration", t.calibration}};
    rep.diagnostics["infeasible"] = t.infeasible;
  }
  return kOk;
}

int cmd_simulate(const Options& o, Report& rep, bool bench) {
  json cfg_json;
  try {
    cfg_json = load_json_arg(o.config);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("--config: ") + e.what());
  }
  SimConfig cfg = parse_sim_config(cfg_json);
  if (bench) cfg.study = "timing";
  if (o.threads > 0) cfg.threads = o.threads;
  rep.config = to_json(cfg);
  rep.seed = cfg.master_seed;
  const SimReport sim = run_study(cfg);
  rep.result = sim.to_json();
  rep.diagnostics = {{"warnings", sim.warnings}, {"infeasible", false}};
  if (!o.c.out.empty()) {
    fs::create_directories(o.c.out);
    write_atomic(fs::path(o.c.out) / (cfg.study + ".csv"), sim.to_csv());
  }
  return kOk;
}

json report_json(const Report& r, double seconds) {
  return {{"command", r.command}, {"config", r.config},           {"seed", r.seed},
          {"result", r.result},   {"diagnostics", r.diagnostics}, {"timing_s", seconds},
          {"version", kVersion}};
}

void add_common(CLI::App* sub, Options& o, bool with_data) {
  Common& c = o.c;
  if (with_data) {
    sub->add_option("--data", c.data, "CSV data file")->required();
    sub->add_option("--model", c.model, "model name (mean|normal3|linreg), JSON object or JSON file");
    sub->add_option("--groups", c.groups, "number of groups n");
    sub->add_option("--theta0", c.theta0, "comma-separated parameter vector")->delimiter(',');
    sub->add_option("--tol", c.tol, "outer gradient tolerance");
    sub->add_option("--inner-tol", c.inner_tol, "dual gradient tolerance");
    sub->add_option("--max-outer", c.max_outer, "outer iteration limit");
  }
  sub->add_flag("--header", c.header, "skip the first row of each CSV");
  sub->add_option("--columns", c.columns, "1-based columns to keep, in order (response first)");
  sub->add_option("--group-size", c.group_size, "group size m");
  sub->add_option("--seed", c.seed, "grouping / master seed");
  sub->add_option("--out", c.out, "write the report here instead of stdout");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Grouped empirical likelihood estimation and testing", "gelkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto* est = app.add_subcommand("estimate", "GEL estimate with Wald SDs and optional profile intervals");
  add_common(est, o, true);
  est->add_option("--ci", o.ci, "profile confidence level for every component");
  est->add_flag("--el", o.el, "classical EL (one group per observation)");
  est->add_option("--train-rows", o.train_rows, "fit on the first K rows, report MSPE on the rest");

  auto* tst = app.add_subcommand("test", "chi-square test of theta = theta0");
  add_common(tst, o, true);
  tst->add_option("--calibration", o.calibration, "profile (default) or raw");

  auto* two = app.add_subcommand("two-sample", "two-sample GEL test of theta_y - theta_x = pi0");
  add_common(two, o, false);
  two->add_option("--data-x", o.data_x, "CSV for sample X")->required();
  two->add_option("--data-y", o.data_y, "CSV for sample Y")->required();
  two->add_option("--pi0", o.pi0, "hypothesized difference")->delimiter(',')->required();
  two->add_option("--model", o.c.model, "model for both samples (default mean)");
  two->add_flag("--trim", o.trim, "drop a seeded random remainder so both sizes are multiples of m");

  auto* dg = app.add_subcommand("dgel", "distributed GEL over K in-process shards");
  add_common(dg, o, true);
  dg->add_option("--shards", o.shards, "number of shards K")->required();
  dg->add_option("--threads", o.threads, "worker-pool width (default GELKIT_THREADS or cores)");
  dg->add_flag("--size-weighted", o.size_weighted, "weight shard estimates by shard size");
  dg->add_flag("--lenient", o.lenient, "average surviving shards when some fail");

  auto* sim = app.add_subcommand("simulate", "run a study config");
  sim->add_option("--config", o.config, "study config JSON")->required();
  sim->add_option("--out", o.c.out, "directory for the report JSON and CSV");
  sim->add_option("--threads", o.threads, "worker-pool width");
  auto* bench = app.add_subcommand("bench", "timing study (median wall-clock per method and N)");
  bench->add_option("--config", o.config, "study config JSON")->required();
  bench->add_option("--out", o.c.out, "directory for the report JSON and CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'gelkit --help' for usage\n";
    return kUsage;
  }

  Report rep;
  rep.command = app.get_subcommands().front()->get_name();
  rep.seed = o.c.seed;
  int code = kOk;
  try {
    if (rep.command == "estimate") code = cmd_estimate(o, rep);
    else if (rep.command == "test") code = cmd_test(o, rep);
    else if (rep.command == "two-sample") code = cmd_two_sample(o, rep);
    else if (rep.command == "dgel") code = cmd_dgel(o, rep);
    else code = cmd_simulate(o, rep, rep.command == "bench");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    rep.result = nullptr;
    rep.diagnostics = {{"infeasible", true}, {"error", e.what()}, {"warnings", json::array()}};
    code = kInfeasible;
  } catch (const NonConvergence& e) {
    err << "non-convergence: " << e.what() << "\n";
    rep.result = nullptr;
    rep.diagnostics = {{"infeasible", false}, {"error", e.what()}, {"warnings", json::array()}};
    code = kNonConvergence;
  } catch (const SingularError& e) {
    err << "non-convergence: " << e.what() << "\n";
    rep.result = nullptr;
    rep.diagnostics = {{"infeasible", false}, {"error", e.what()}, {"warnings", json::array()}};
    code = kNonConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string text = report_json(rep, seconds).dump(2) + "\n";
  try {
    if (o.c.out.empty()) {
      out << text;
    } else if (rep.command == "simulate" || rep.command == "bench") {
      fs::create_directories(o.c.out);
      write_atomic(fs::path(o.c.out) / "report.json", text);
      out << text;
    } else {
      write_atomic(o.c.out, text);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return code;
}

}  // namespace gelkit::cli

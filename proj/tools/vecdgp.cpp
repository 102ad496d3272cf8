// Command-line front end: fit / predict / benchmark with file-based I/O.
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "vecdgp/vecdgp.hpp"

namespace {

using namespace vecdgp;

// Declarative key=value configuration. Every key corresponds to one CLI
// concept; unknown keys are rejected so typos fail loudly.
struct RunConfig {
  SamplerConfig sampler;
  // benchmark
  TestFunction function = TestFunction::schaffer2;
  int dim = 2;
  int n_train = 100;
  int n_test = 100;
  double noise_sd = 0.0;
  int reps = 1;
  std::vector<ModelKind> models = {ModelKind::vecchia_dgp};
  std::vector<int> m_sweep;
  // prediction
  int m_pred = 25;
  bool lite = true;
  bool re_approx = false;
  // files / execution
  std::string data_path, test_path, trace_path, out_path, summary_path, joint_path;
  int threads = 0;  // 0: library default

  // echoed into output headers; threads deliberately excluded so outputs are
  // identical across thread counts
  std::vector<std::string> echo() const {
    std::vector<std::string> lines;
    auto kv = [&lines](const std::string& k, const std::string& v) {
      lines.push_back(k + "=" + v);
    };
    kv("seed", std::to_string(sampler.seed));
    kv("kernel", to_string(sampler.family));
    kv("vecchia", sampler.backend == Backend::vecchia ? "true" : "false");
    kv("iters", std::to_string(sampler.n_mcmc));
    kv("burn_in", std::to_string(sampler.burn_in));
    kv("thin", std::to_string(sampler.thin));
    kv("depth", std::to_string(sampler.depth));
    kv("m", std::to_string(sampler.m));
    kv("m_pred", std::to_string(m_pred));
    kv("g", detail::format_double(sampler.g));
    kv("sample_g", sampler.sample_g ? "true" : "false");
    kv("re_approx", re_approx ? "true" : "false");
    return lines;
  }
};

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

template <class T>
T parse_num(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_integral_v<T>) {
      const long long x = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return static_cast<T>(x);
    } else {
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return static_cast<T>(x);
    }
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  SamplerConfig& s = cfg.sampler;
  if (key == "iters") s.n_mcmc = parse_num<int>(value, key);
  else if (key == "burn_in") s.burn_in = parse_num<int>(value, key);
  else if (key == "thin") s.thin = parse_num<int>(value, key);
  else if (key == "seed") s.seed = parse_num<std::uint64_t>(value, key);
  else if (key == "m") s.m = parse_num<int>(value, key);
  else if (key == "depth") s.depth = parse_num<int>(value, key);
  else if (key == "p") s.p = parse_num<int>(value, key);
  else if (key == "kernel") s.family = kernel_family_from_string(value);
  else if (key == "vecchia") s.backend = parse_bool(value, key) ? Backend::vecchia : Backend::dense;
  else if (key == "g") s.g = parse_num<double>(value, key);
  else if (key == "sample_g") s.sample_g = parse_bool(value, key);
  else if (key == "g_prior_mean") s.g_prior_mean = parse_num<double>(value, key);
  else if (key == "theta_prior_shape") s.theta_prior_shape = parse_num<double>(value, key);
  else if (key == "theta_prior_rate") s.theta_prior_rate = parse_num<double>(value, key);
  else if (key == "theta_min") s.theta_min = parse_num<double>(value, key);
  else if (key == "prop_lower") s.prop_lower = parse_num<double>(value, key);
  else if (key == "prop_upper") s.prop_upper = parse_num<double>(value, key);
  else if (key == "theta_init_outer") s.theta_init_outer = parse_num<double>(value, key);
  else if (key == "theta_init_inner") s.theta_init_inner = parse_num<double>(value, key);
  else if (key == "m_pred") cfg.m_pred = parse_num<int>(value, key);
  else if (key == "lite") cfg.lite = parse_bool(value, key);
  else if (key == "re_approx") cfg.re_approx = parse_bool(value, key);
  else if (key == "function") cfg.function = test_function_from_string(value);
  else if (key == "dim") cfg.dim = parse_num<int>(value, key);
  else if (key == "n_train") cfg.n_train = parse_num<int>(value, key);
  else if (key == "n_test") cfg.n_test = parse_num<int>(value, key);
  else if (key == "noise_sd") cfg.noise_sd = parse_num<double>(value, key);
  else if (key == "reps") cfg.reps = parse_num<int>(value, key);
  else if (key == "models") {
    cfg.models.clear();
    for (const auto& name : split_list(value)) cfg.models.push_back(model_kind_from_string(name));
  } else if (key == "m_sweep") {
    cfg.m_sweep.clear();
    for (const auto& v : split_list(value)) cfg.m_sweep.push_back(parse_num<int>(v, key));
  }
  else if (key == "data") cfg.data_path = value;
  else if (key == "test") cfg.test_path = value;
  else if (key == "trace") cfg.trace_path = value;
  else if (key == "out") cfg.out_path = value;
  else if (key == "summary_out") cfg.summary_path = value;
  else if (key == "joint_out") cfg.joint_path = value;
  else if (key == "threads") cfg.threads = parse_num<int>(value, key);
  else throw ConfigError("unknown config key: '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

void print_fit_report(const DgpTrace& trace) {
  const AcceptStats& a = trace.accept;
  auto rate = [](std::int64_t acc, std::int64_t prop) {
    return prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
  };
  std::printf("fit complete: %lld iterations, %zu retained samples\n",
              static_cast<long long>(trace.total_iterations), trace.samples.size());
  for (std::size_t l = 0; l < a.theta_x_prop.size(); ++l)
    for (std::size_t k = 0; k < a.theta_x_prop[l].size(); ++k)
      std::printf("accept[theta_x layer %zu node %zu] = %.3f\n", l, k,
                  rate(a.theta_x_acc[l][k], a.theta_x_prop[l][k]));
  std::printf("accept[theta_w] = %.3f\n", rate(a.theta_w_acc, a.theta_w_prop));
  if (a.g_prop > 0) std::printf("accept[g] = %.3f\n", rate(a.g_acc, a.g_prop));
  if (a.ess_moves > 0)
    std::printf("ess likelihood evaluations per move = %.2f\n",
                static_cast<double>(a.ess_evals) / static_cast<double>(a.ess_moves));
  if (!trace.loglik_history.empty())
    std::printf("final outer profiled loglik = %.6f\n", trace.loglik_history.back());
}

int cmd_fit(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("fit: --data is required");
  if (cfg.out_path.empty()) throw ConfigError("fit: --out is required");
  const Table table = read_table(cfg.data_path);
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  split_xy(table, X, Y);

  DgpTrace trace;
  if (cfg.re_approx && cfg.sampler.depth > 1) {
    // two-phase chain: burn in, rebuild the warped conditioning sets from the
    // last burn-in state, then run the configured chain from there
    SamplerConfig phase1 = cfg.sampler;
    phase1.n_mcmc = std::max(2, cfg.sampler.burn_in);
    phase1.burn_in = phase1.n_mcmc - 1;
    phase1.thin = 1;
    DgpTrace warmup = fit(X, Y, phase1);
    warmup.config.burn_in = cfg.sampler.burn_in;
    warmup.config.thin = cfg.sampler.thin;
    trace = continue_fit(warmup, cfg.sampler.n_mcmc, true);
  } else {
    trace = fit(X, Y, cfg.sampler);
  }
  write_trace(trace, cfg.out_path);
  print_fit_report(trace);
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  if (cfg.trace_path.empty()) throw ConfigError("predict: --trace is required");
  if (cfg.test_path.empty()) throw ConfigError("predict: --test is required");
  if (cfg.out_path.empty()) throw ConfigError("predict: --out is required");
  const DgpTrace trace = read_trace(cfg.trace_path);
  const Table table = read_table(cfg.test_path);
  if (table.values.cols() != trace.d)
    throw DataError("predict: test file has " + std::to_string(table.values.cols()) +
                    " columns but the trace was fit with d = " + std::to_string(trace.d));

  PredictOptions opt;
  opt.m_pred = cfg.m_pred;
  RunConfig echo_cfg = cfg;
  echo_cfg.sampler = trace.config;
  const std::vector<std::string> header = echo_cfg.echo();

  const PredictionResult pred = cfg.lite ? predict_independent(trace, table.values, opt)
                                         : predict_joint(trace, table.values, opt);
  Eigen::MatrixXd out(table.values.rows(), 3);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out(i, 0) = static_cast<double>(i);
    out(i, 1) = pred.mean[i];
    out(i, 2) = pred.variance[i];
  }
  write_table(cfg.out_path, header, {"test_index", "mean", "variance"}, out);
  if (!cfg.lite) {
    const std::string joint_path =
        cfg.joint_path.empty() ? cfg.out_path + ".cov" : cfg.joint_path;
    write_matrix(joint_path, header, *pred.joint_cov);
  }
  std::printf("predictions written: %lld rows\n", static_cast<long long>(out.rows()));
  return 0;
}

int cmd_benchmark(const RunConfig& cfg) {
  if (cfg.out_path.empty()) throw ConfigError("benchmark: --out is required");
  ExperimentConfig exp;
  exp.function = cfg.function;
  exp.dim = cfg.dim;
  exp.n_train = cfg.n_train;
  exp.n_test = cfg.n_test;
  exp.noise_sd = cfg.noise_sd;
  exp.reps = cfg.reps;
  exp.models = cfg.models;
  exp.m_values = cfg.m_sweep.empty() ? std::vector<int>{cfg.sampler.m} : cfg.m_sweep;
  exp.m_pred = cfg.m_pred;
  exp.sampler = cfg.sampler;
  exp.seed = cfg.sampler.seed;

  const ScoreTable table = run_experiment(exp);

  std::vector<std::string> header = cfg.echo();
  header.push_back("function=" + to_string(exp.function));
  header.push_back("n_train=" + std::to_string(exp.n_train));
  header.push_back("n_test=" + std::to_string(exp.n_test));
  header.push_back("noise_sd=" + detail::format_double(exp.noise_sd));
  header.push_back("reps=" + std::to_string(exp.reps));

  std::ofstream out(cfg.out_path);
  if (!out) throw DataError("cannot open output file for writing: " + cfg.out_path);
  for (const auto& line : header) out << "# " << line << "\n";
  out << "model,rep,n,m,rmse,rmspe,crps,fit_s,pred_s\n";
  for (const auto& r : table.rows)
    out << r.model << ',' << r.rep << ',' << r.n << ',' << r.m << ','
        << detail::format_double(r.rmse) << ',' << detail::format_double(r.rmspe) << ','
        << detail::format_double(r.crps) << ',' << detail::format_double(r.fit_s) << ','
        << detail::format_double(r.pred_s) << "\n";
  out.close();

  const std::string summary_path =
      cfg.summary_path.empty() ? cfg.out_path + ".summary" : cfg.summary_path;
  std::ofstream sum(summary_path);
  if (!sum) throw DataError("cannot open output file for writing: " + summary_path);
  for (const auto& line : header) sum << "# " << line << "\n";
  sum << "model,m,cells,median_rmse,median_rmspe,median_crps,median_fit_s,median_pred_s\n";
  for (const auto& s : summarize(table))
    sum << s.model << ',' << s.m << ',' << s.cells << ','
        << detail::format_double(s.median_rmse) << ',' << detail::format_double(s.median_rmspe)
        << ',' << detail::format_double(s.median_crps) << ','
        << detail::format_double(s.median_fit_s) << ','
        << detail::format_double(s.median_pred_s) << "\n";
  std::printf("benchmark complete: %zu score rows\n", table.rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vecchia-approximated deep Gaussian process surrogates"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> m_flag, m_pred_flag, depth_flag, iters_flag, burn_flag, thin_flag,
      threads_flag;
  std::optional<std::string> kernel_flag;
  std::optional<bool> vecchia_flag, lite_flag;
  std::optional<double> fix_g_flag;
  bool re_approx_flag = false, sample_g_flag = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--seed", seed_flag, "RNG seed");
    sub->add_option("--threads", threads_flag, "OpenMP thread count (default: hardware)");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a (deep) GP by MCMC");
  add_common(fit_cmd);
  fit_cmd->add_option("--data", cfg.data_path, "training table: d input columns + 1 response");
  fit_cmd->add_option("--out", cfg.out_path, "trace file to write");
  fit_cmd->add_option("--m", m_flag, "conditioning-set size (default 25)");
  fit_cmd->add_option("--depth", depth_flag, "number of Gaussian layers (default 2)");
  fit_cmd->add_option("--kernel", kernel_flag, "matern52 | sqexp");
  fit_cmd->add_option("--vecchia", vecchia_flag, "true: sparse Vecchia path; false: dense path");
  fit_cmd->add_option("--iters", iters_flag, "MCMC iterations");
  fit_cmd->add_option("--burn-in", burn_flag, "burn-in iterations");
  fit_cmd->add_option("--thin", thin_flag, "thinning stride");
  fit_cmd->add_option("--fix-g", fix_g_flag, "fix the nugget at this value (default 1e-8)");
  fit_cmd->add_flag("--sample-g", sample_g_flag, "sample the nugget instead of fixing it");
  fit_cmd->add_flag("--re-approx", re_approx_flag,
                    "rebuild warped conditioning sets after burn-in and restart");

  CLI::App* pred_cmd = app.add_subcommand("predict", "predict from a stored trace");
  add_common(pred_cmd);
  pred_cmd->add_option("--trace", cfg.trace_path, "trace file from fit");
  pred_cmd->add_option("--test", cfg.test_path, "test table: d input columns");
  pred_cmd->add_option("--out", cfg.out_path, "prediction table to write");
  pred_cmd->add_option("--m-pred", m_pred_flag, "prediction conditioning-set size (default 25)");
  pred_cmd->add_option("--lite", lite_flag, "true: pointwise; false: joint with covariance file");
  pred_cmd->add_option("--joint-out", cfg.joint_path, "covariance file (default: <out>.cov)");

  CLI::App* bench_cmd = app.add_subcommand("benchmark", "run the Monte-Carlo benchmark protocol");
  add_common(bench_cmd);
  bench_cmd->add_option("--out", cfg.out_path, "score table to write");
  bench_cmd->add_option("--summary-out", cfg.summary_path, "summary file (default: <out>.summary)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    // flags override config-file values
    if (seed_flag) cfg.sampler.seed = *seed_flag;
    if (m_flag) cfg.sampler.m = *m_flag;
    if (m_pred_flag) cfg.m_pred = *m_pred_flag;
    if (depth_flag) cfg.sampler.depth = *depth_flag;
    if (iters_flag) cfg.sampler.n_mcmc = *iters_flag;
    if (burn_flag) cfg.sampler.burn_in = *burn_flag;
    if (thin_flag) cfg.sampler.thin = *thin_flag;
    if (threads_flag) cfg.threads = *threads_flag;
    if (kernel_flag) cfg.sampler.family = kernel_family_from_string(*kernel_flag);
    if (vecchia_flag) cfg.sampler.backend = *vecchia_flag ? Backend::vecchia : Backend::dense;
    if (lite_flag) cfg.lite = *lite_flag;
    if (fix_g_flag) {
      cfg.sampler.g = *fix_g_flag;
      cfg.sampler.sample_g = false;
    }
    if (sample_g_flag) {
      cfg.sampler.sample_g = true;
      if (cfg.sampler.g <= 0.0) cfg.sampler.g = 0.01;
    }
    if (re_approx_flag) cfg.re_approx = true;
    apply_threads(cfg.threads);

    if (fit_cmd->parsed()) return cmd_fit(cfg);
    if (pred_cmd->parsed()) return cmd_predict(cfg);
    if (bench_cmd->parsed()) return cmd_benchmark(cfg);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidArgument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const FactorizationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#ifndef VECDGP_BENCH_HPP
#define VECDGP_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "vecdgp/design.hpp"
#include "vecdgp/metrics.hpp"
#include "vecdgp/predict.hpp"
#include "vecdgp/testfuns.hpp"

namespace vecdgp {

enum class TestFunction { schaffer2, gfunction };

inline TestFunction test_function_from_string(const std::string& s) {
  if (s == "schaffer2") return TestFunction::schaffer2;
  if (s == "gfunction") return TestFunction::gfunction;
  throw ConfigError("unknown test function: " + s);
}

inline std::string to_string(TestFunction f) {
  return f == TestFunction::schaffer2 ? "schaffer2" : "gfunction";
}

enum class ModelKind { vecchia_dgp, full_dgp, vecchia_gp, dense_gp };

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "vecchia-dgp") return ModelKind::vecchia_dgp;
  if (s == "full-dgp") return ModelKind::full_dgp;
  if (s == "vecchia-gp") return ModelKind::vecchia_gp;
  if (s == "dense-gp") return ModelKind::dense_gp;
  throw ConfigError("unknown model kind: " + s);
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::vecchia_dgp: return "vecchia-dgp";
    case ModelKind::full_dgp: return "full-dgp";
    case ModelKind::vecchia_gp: return "vecchia-gp";
    default: return "dense-gp";
  }
}

// Monte-Carlo benchmarking protocol: per repetition, fresh Latin hypercube
// training/testing designs, optional additive Gaussian noise on the training
// responses, one fit and one (independent) prediction per model, scored
// against the noiseless function values.
struct ExperimentConfig {
  TestFunction function = TestFunction::schaffer2;
  int dim = 2;  // gfunction dimension; schaffer2 forces 2
  int n_train = 100;
  int n_test = 100;
  double noise_sd = 0.0;
  int reps = 1;
  std::vector<ModelKind> models = {ModelKind::vecchia_dgp};
  std::vector<int> m_values = {25};  // conditioning-size sweep axis
  int m_pred = -1;                   // -1: use the training m
  SamplerConfig sampler;
  std::uint64_t seed = 0;

  int resolved_dim() const { return function == TestFunction::schaffer2 ? 2 : dim; }

  void validate() const {
    if (n_train < 2 || n_test < 1) throw ConfigError("n_train/n_test too small");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (models.empty()) throw ConfigError("no models selected");
    if (m_values.empty()) throw ConfigError("empty m sweep");
    if (function == TestFunction::gfunction && dim < 1)
      throw ConfigError("gfunction dimension must be >= 1");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be nonnegative");
    sampler.validate();
  }
};

struct ScoreRow {
  std::string model;
  int rep = 0, n = 0, m = 0;
  double rmse = 0.0, rmspe = 0.0, crps = 0.0, fit_s = 0.0, pred_s = 0.0;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;
};

namespace detail {

inline Eigen::VectorXd evaluate_function(TestFunction f, const Eigen::MatrixXd& X) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    y[i] = f == TestFunction::schaffer2 ? schaffer2(X.row(i)) : gfunction(X.row(i));
  return y;
}

inline Eigen::MatrixXd design_on_domain(TestFunction f, int n, int d, std::uint64_t seed) {
  const Eigen::MatrixXd unit = lhs(n, d, seed);
  if (f == TestFunction::schaffer2)
    return scale_to_box(unit, Eigen::VectorXd::Constant(2, -2.0),
                        Eigen::VectorXd::Constant(2, 2.0));
  return unit;
}

inline SamplerConfig model_sampler_config(const ExperimentConfig& cfg, ModelKind kind, int m,
                                          std::uint64_t fit_seed) {
  SamplerConfig sc = cfg.sampler;
  sc.m = m;
  sc.seed = fit_seed;
  switch (kind) {
    case ModelKind::vecchia_dgp:
      sc.backend = Backend::vecchia;
      sc.depth = std::max(2, cfg.sampler.depth);
      break;
    case ModelKind::full_dgp:
      sc.backend = Backend::dense;
      sc.depth = std::max(2, cfg.sampler.depth);
      break;
    case ModelKind::vecchia_gp:
      sc.backend = Backend::vecchia;
      sc.depth = 1;
      break;
    case ModelKind::dense_gp:
      sc.backend = Backend::dense;
      sc.depth = 1;
      break;
  }
  return sc;
}

}  // namespace detail

// Run the full protocol. Failed (model, rep) cells are reported on stderr
// and skipped; the run continues so one diverged fit cannot sink a sweep.
inline ScoreTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int d = cfg.resolved_dim();
  ScoreTable table;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    const Eigen::MatrixXd Xtrain =
        detail::design_on_domain(cfg.function, cfg.n_train, d, derive_seed(cfg.seed, {0xE0, r, 1}));
    const Eigen::MatrixXd Xtest =
        detail::design_on_domain(cfg.function, cfg.n_test, d, derive_seed(cfg.seed, {0xE0, r, 2}));
    Eigen::VectorXd Ytrain = detail::evaluate_function(cfg.function, Xtrain);
    const Eigen::VectorXd Ytruth = detail::evaluate_function(cfg.function, Xtest);
    if (cfg.noise_sd > 0.0) {
      Rng noise(derive_seed(cfg.seed, {0xE0, r, 3}));
      for (Eigen::Index i = 0; i < Ytrain.size(); ++i)
        Ytrain[i] += cfg.noise_sd * noise.normal();
    }
    // one fit seed per repetition so sweeps over m and backends stay matched
    const std::uint64_t fit_seed = derive_seed(cfg.seed, {0xF0, r});

    for (int m : cfg.m_values) {
      for (ModelKind kind : cfg.models) {
        const SamplerConfig sc = detail::model_sampler_config(cfg, kind, m, fit_seed);
        ScoreRow row;
        row.model = to_string(kind);
        row.rep = rep;
        row.n = cfg.n_train;
        row.m = std::min(m, cfg.n_train - 1);
        try {
          const auto t0 = std::chrono::steady_clock::now();
          const DgpTrace trace = fit(Xtrain, Ytrain, sc);
          const auto t1 = std::chrono::steady_clock::now();
          PredictOptions popt;
          popt.m_pred = cfg.m_pred > 0 ? cfg.m_pred : m;
          const PredictionResult pred = predict_independent(trace, Xtest, popt);
          const auto t2 = std::chrono::steady_clock::now();
          row.fit_s = std::chrono::duration<double>(t1 - t0).count();
          row.pred_s = std::chrono::duration<double>(t2 - t1).count();
          row.rmse = rmse(pred.mean, Ytruth);
          row.rmspe = rmspe(pred.mean, Ytruth);
          row.crps = crps(Ytruth, pred.mean, pred.variance.cwiseSqrt());
          table.rows.push_back(std::move(row));
        } catch (const Error& e) {
          std::cerr << "[vecdgp] benchmark cell failed (model=" << to_string(kind)
                    << ", rep=" << rep << ", m=" << m << "): " << e.what() << "\n";
        }
      }
    }
  }
  return table;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

struct SummaryRow {
  std::string model;
  int m = 0;
  double median_rmse = 0.0, median_rmspe = 0.0, median_crps = 0.0;
  double median_fit_s = 0.0, median_pred_s = 0.0;
  int cells = 0;
};

inline std::vector<SummaryRow> summarize(const ScoreTable& table) {
  std::vector<SummaryRow> out;
  for (const auto& row : table.rows) {
    bool found = false;
    for (auto& s : out)
      if (s.model == row.model && s.m == row.m) found = true;
    if (found) continue;
    std::vector<double> r, rp, c, ft, pt;
    for (const auto& other : table.rows)
      if (other.model == row.model && other.m == row.m) {
        r.push_back(other.rmse);
        rp.push_back(other.rmspe);
        c.push_back(other.crps);
        ft.push_back(other.fit_s);
        pt.push_back(other.pred_s);
      }
    SummaryRow s;
    s.model = row.model;
    s.m = row.m;
    s.median_rmse = median(r);
    s.median_rmspe = median(rp);
    s.median_crps = median(c);
    s.median_fit_s = median(ft);
    s.median_pred_s = median(pt);
    s.cells = static_cast<int>(r.size());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace vecdgp

#endif  // VECDGP_BENCH_HPP

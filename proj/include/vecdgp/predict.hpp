#ifndef VECDGP_PREDICT_HPP
#define VECDGP_PREDICT_HPP

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vecdgp/dense_gp.hpp"
#include "vecdgp/errors.hpp"
#include "vecdgp/mcmc.hpp"

namespace vecdgp {

struct PredictOptions {
  int m_pred = 25;                // conditioning-set size for prediction
  bool mean_map = false;          // map test latents by the conditional mean
  bool retain_per_sample = false; // keep per-sample moments in the result
  bool condition_on_test = true;  // joint mode: test points may condition on earlier test points
};

// Ergodic-averaged predictive moments in the original response units.
// variance = avg per-sample variance + variance of per-sample means (law of
// total variance); joint_cov present only in joint mode.
struct PredictionResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::optional<Eigen::MatrixXd> joint_cov;
  Eigen::MatrixXd sample_means;  // T x n_p when retained, else empty
  Eigen::MatrixXd sample_vars;
};

namespace detail {

inline Rng latent_stream(const DgpTrace& trace, int t, int i, int layer) {
  return Rng(derive_seed(trace.seed,
                         {0x50, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(layer)}));
}

// Map scaled test inputs through the latent layers of retained sample t.
// Layer-0 conditioning sets are the fixed input-space sets; deeper layers
// recompute warped sets per sample. One Gaussian draw per (test point, node)
// propagates latent uncertainty unless mean mapping is requested.
inline Eigen::MatrixXd map_latent_impl(const DgpTrace& trace, const Eigen::MatrixXd& Xt,
                                       const std::vector<std::vector<int>>& sets0, int t,
                                       int m_eff, bool mean_map) {
  const RetainedSample& s = trace.samples[t];
  const int n_p = static_cast<int>(Xt.rows());
  Eigen::MatrixXd query = Xt;
  for (int layer = 0; layer < trace.n_latent(); ++layer) {
    const Eigen::MatrixXd& locs = layer == 0 ? trace.Xs : s.W[layer - 1];
    const std::vector<std::vector<int>> warped_sets =
        (trace.backend == Backend::vecchia && layer > 0)
            ? nn_query_sets(locs, query, m_eff)
            : std::vector<std::vector<int>>{};
    const auto& sets = layer == 0 ? sets0 : warped_sets;
    Eigen::MatrixXd mapped(n_p, trace.p);
    if (trace.backend == Backend::vecchia) {
      detail::MomentScratch scratch;
      for (int i = 0; i < n_p; ++i) {
        Rng stream = latent_stream(trace, t, i, layer);
        for (int k = 0; k < trace.p; ++k) {
          const KernelSpec spec{trace.family, s.theta_x[layer][k], 1.0, 0.0};
          const ConditionalMoments cm = conditional_moments_impl(
              locs, sets[i].data(), static_cast<int>(sets[i].size()), query.row(i), spec,
              scratch, i);
          double mean = 0.0;
          for (std::size_t a = 0; a < sets[i].size(); ++a)
            mean += cm.weights[static_cast<Eigen::Index>(a)] * s.W[layer](sets[i][a], k);
          mapped(i, k) = mean_map ? mean : mean + std::sqrt(cm.var) * stream.normal();
        }
      }
    } else {
      // dense route: condition on every training row, same draw streams
      Eigen::MatrixXd means(n_p, trace.p), vars(n_p, trace.p);
      for (int k = 0; k < trace.p; ++k) {
        const KernelSpec spec{trace.family, s.theta_x[layer][k], 1.0, 0.0};
        const Eigen::LLT<Eigen::MatrixXd> llt =
            chol_with_jitter(cov_matrix_sym(locs, spec), spec.tau2);
        const Eigen::MatrixXd Kcross = cov_matrix(query, locs, spec);
        means.col(k) = Kcross * llt.solve(s.W[layer].col(k));
        const Eigen::MatrixXd Vt = llt.matrixL().solve(Kcross.transpose());
        vars.col(k) =
            (1.0 - Vt.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
      }
      for (int i = 0; i < n_p; ++i) {
        Rng stream = latent_stream(trace, t, i, layer);
        for (int k = 0; k < trace.p; ++k)
          mapped(i, k) =
              mean_map ? means(i, k) : means(i, k) + std::sqrt(vars(i, k)) * stream.normal();
      }
    }
    query = std::move(mapped);
  }
  return query;
}

struct SampleMoments {
  Eigen::VectorXd mean;  // standardized units
  Eigen::VectorXd var;   // scaled by tau2_hat, standardized units
};

// Pointwise predictive moments of retained sample t at warped locations.
inline SampleMoments independent_moments(const DgpTrace& trace, int t,
                                         const Eigen::MatrixXd& ref,
                                         const Eigen::MatrixXd& query,
                                         const std::vector<std::vector<int>>* fixed_sets,
                                         int m_eff) {
  const RetainedSample& s = trace.samples[t];
  const int n_p = static_cast<int>(query.rows());
  SampleMoments out;
  out.mean.resize(n_p);
  out.var.resize(n_p);
  const KernelSpec spec{trace.family, s.theta_w, 1.0, s.g};
  if (trace.backend == Backend::vecchia) {
    const std::vector<std::vector<int>> warped =
        fixed_sets ? std::vector<std::vector<int>>{} : nn_query_sets(ref, query, m_eff);
    const auto& sets = fixed_sets ? *fixed_sets : warped;
    detail::MomentScratch scratch;
    for (int i = 0; i < n_p; ++i) {
      const ConditionalMoments cm = conditional_moments_impl(
          ref, sets[i].data(), static_cast<int>(sets[i].size()), query.row(i), spec, scratch, i);
      double mean = 0.0;
      for (std::size_t a = 0; a < sets[i].size(); ++a)
        mean += cm.weights[static_cast<Eigen::Index>(a)] * trace.Ys[sets[i][a]];
      out.mean[i] = mean;
      out.var[i] = s.tau2_hat * cm.var;
    }
  } else {
    const Eigen::LLT<Eigen::MatrixXd> llt =
        chol_with_jitter(cov_matrix_sym(ref, spec), spec.tau2);
    const Eigen::MatrixXd Kcross = cov_matrix(query, ref, spec);
    out.mean = Kcross * llt.solve(trace.Ys);
    const Eigen::MatrixXd Vt = llt.matrixL().solve(Kcross.transpose());
    out.var = s.tau2_hat *
              ((1.0 + s.g) - Vt.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  }
  return out;
}

inline void check_predict_args(const DgpTrace& trace, const Eigen::MatrixXd& Xtest,
                               const PredictOptions& opt) {
  if (trace.samples.empty()) throw InvalidArgument("predict: trace has no retained samples");
  if (Xtest.rows() < 1) throw InvalidArgument("predict: empty test set");
  if (Xtest.cols() != trace.d) throw InvalidArgument("predict: test dimension mismatch");
  if (!Xtest.allFinite()) throw InvalidArgument("predict: non-finite test inputs");
  if (opt.m_pred < 1) throw InvalidArgument("predict: m_pred must be >= 1");
}

}  // namespace detail

// Warped test locations for one retained sample (input-space conditioning
// sets are rebuilt here; the batch predictors compute them once).
inline Eigen::MatrixXd map_latent(const DgpTrace& trace, const Eigen::MatrixXd& Xtest, int t,
                                  const PredictOptions& opt = {}) {
  detail::check_predict_args(trace, Xtest, opt);
  if (t < 0 || t >= static_cast<int>(trace.samples.size()))
    throw InvalidArgument("map_latent: sample index out of range");
  if (trace.n_latent() == 0) throw InvalidArgument("map_latent: model has no latent layer");
  const Eigen::MatrixXd Xt = trace.norm.scale_x(Xtest);
  const int m_eff = std::min(opt.m_pred, trace.n);
  const auto sets0 =
      trace.backend == Backend::vecchia
          ? nn_query_sets(trace.Xs, Xt, m_eff)
          : std::vector<std::vector<int>>{};
  return detail::map_latent_impl(trace, Xt, sets0, t, m_eff, opt.mean_map);
}

// Pointwise prediction: per retained sample, map the test inputs through the
// latent layers, recompute warped conditioning sets, evaluate conditional
// moments, then average over samples by the law of total variance.
inline PredictionResult predict_independent(const DgpTrace& trace, const Eigen::MatrixXd& Xtest,
                                            const PredictOptions& opt = {}) {
  detail::check_predict_args(trace, Xtest, opt);
  const Eigen::MatrixXd Xt = trace.norm.scale_x(Xtest);
  const int T = static_cast<int>(trace.samples.size());
  const int n_p = static_cast<int>(Xt.rows());
  const int m_eff = std::min(opt.m_pred, trace.n);

  std::vector<std::vector<int>> sets0;
  if (trace.backend == Backend::vecchia) sets0 = nn_query_sets(trace.Xs, Xt, m_eff);

  Eigen::MatrixXd mu(T, n_p), s2(T, n_p);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < T; ++t) {
    detail::SampleMoments sm;
    if (trace.n_latent() == 0) {
      sm = detail::independent_moments(trace, t, trace.Xs, Xt, &sets0, m_eff);
    } else {
      const Eigen::MatrixXd Wq = detail::map_latent_impl(trace, Xt, sets0, t, m_eff, opt.mean_map);
      sm = detail::independent_moments(trace, t, trace.samples[t].W.back(), Wq, nullptr, m_eff);
    }
    mu.row(t) = sm.mean.transpose();
    s2.row(t) = sm.var.transpose();
  }

  PredictionResult out;
  const Eigen::VectorXd mean_std = mu.colwise().mean().transpose();
  Eigen::VectorXd var_std(n_p);
  for (int i = 0; i < n_p; ++i) {
    const double avg_s2 = s2.col(i).mean();
    const double var_mu = (mu.col(i).array() - mean_std[i]).square().mean();
    var_std[i] = avg_s2 + var_mu;
  }
  const double ysd2 = trace.norm.y_sd * trace.norm.y_sd;
  out.mean = (trace.norm.y_mean + trace.norm.y_sd * mean_std.array()).matrix();
  out.variance = ysd2 * var_std;
  if (opt.retain_per_sample) {
    out.sample_means = (trace.norm.y_mean + trace.norm.y_sd * mu.array()).matrix();
    out.sample_vars = ysd2 * s2;
  }
  return out;
}

namespace detail {

// One sample's joint moments via the stacked factor: test points are ordered
// after training points (fixed random test ordering), conditioning sets are
// nearest neighbors among training rows and earlier test points, and
//   mean = -(U_t^T)^{-1} U_{w,t}^T Y,  cov = tau2_hat * (U_t U_t^T)^{-1}.
struct JointMoments {
  Eigen::VectorXd mean;  // standardized
  Eigen::MatrixXd cov;   // scaled by tau2_hat
};

inline JointMoments stacked_joint_moments(const DgpTrace& trace, int t,
                                          const Eigen::MatrixXd& ref,
                                          const Eigen::MatrixXd& query,
                                          const std::vector<int>& test_order, int m_pred,
                                          bool condition_on_test) {
  const RetainedSample& s = trace.samples[t];
  const int n = static_cast<int>(ref.rows());
  const int n_p = static_cast<int>(query.rows());
  const KernelSpec spec{trace.family, s.theta_w, 1.0, s.g};

  // combined geometry: training rows then test rows in test order
  Eigen::MatrixXd comb(n + n_p, ref.cols());
  comb.topRows(n) = ref;
  for (int j = 0; j < n_p; ++j) comb.row(n + j) = query.row(test_order[j]);

  Eigen::VectorXd diag(n_p), col_var(n_p), v = Eigen::VectorXd::Zero(n_p);
  Eigen::VectorXd direct_mean(n_p);
  Eigen::MatrixXd Ut = Eigen::MatrixXd::Zero(n_p, n_p);
  bool any_test_entry = false;

  detail::MomentScratch scratch;
  std::vector<double> d2;
  std::vector<int> scratch_sel, set;
  for (int j = 0; j < n_p; ++j) {
    const int n_cand = condition_on_test ? n + j : n;
    const int k = std::min(m_pred, n_cand);
    d2.resize(n_cand);
    for (int c = 0; c < n_cand; ++c)
      d2[c] = (comb.row(n + j) - comb.row(c)).squaredNorm();
    detail::select_nearest(d2, n_cand, k, scratch_sel, set);
    const ConditionalMoments cm =
        conditional_moments_impl(comb, set.data(), k, comb.row(n + j), spec, scratch, n + j);
    const double sigma = std::sqrt(cm.var);
    diag[j] = 1.0 / sigma;
    col_var[j] = cm.var;
    Ut(j, j) = diag[j];
    double vj = 0.0, dm = 0.0;
    for (int a = 0; a < k; ++a) {
      const double val = -cm.weights[a] / sigma;
      if (set[a] < n) {
        vj += val * trace.Ys[set[a]];
        dm += cm.weights[a] * trace.Ys[set[a]];
      } else {
        Ut(set[a] - n, j) = val;
        any_test_entry = true;
      }
    }
    v[j] = vj;
    direct_mean[j] = dm;
  }

  JointMoments out;
  Eigen::VectorXd mean_pos(n_p);
  Eigen::MatrixXd cov_pos(n_p, n_p);
  if (!any_test_entry) {
    // U_t diagonal: identical to independent prediction, entry for entry
    mean_pos = direct_mean;
    cov_pos = col_var.asDiagonal();
  } else {
    for (int j = 0; j < n_p; ++j) {
      double acc = -v[j];
      for (int jj = 0; jj < j; ++jj) acc -= Ut(jj, j) * mean_pos[jj];
      mean_pos[j] = acc / diag[j];
    }
    const Eigen::MatrixXd C =
        Ut.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_p, n_p));
    cov_pos = C.transpose() * C;
  }

  out.mean.resize(n_p);
  out.cov.resize(n_p, n_p);
  for (int a = 0; a < n_p; ++a) {
    out.mean[test_order[a]] = mean_pos[a];
    for (int b = 0; b < n_p; ++b) out.cov(test_order[a], test_order[b]) = s.tau2_hat * cov_pos(a, b);
  }
  return out;
}

}  // namespace detail

// Joint prediction with full predictive covariance. Test points are stacked
// after training points; per retained sample the stacked sparse factor gives
// the joint moments, which are then averaged by the law of total covariance.
inline PredictionResult predict_joint(const DgpTrace& trace, const Eigen::MatrixXd& Xtest,
                                      const PredictOptions& opt = {}) {
  detail::check_predict_args(trace, Xtest, opt);
  const Eigen::MatrixXd Xt = trace.norm.scale_x(Xtest);
  const int T = static_cast<int>(trace.samples.size());
  const int n_p = static_cast<int>(Xt.rows());
  const int m_eff = std::min(opt.m_pred, trace.n);

  std::vector<std::vector<int>> sets0;
  if (trace.backend == Backend::vecchia) sets0 = nn_query_sets(trace.Xs, Xt, m_eff);
  const std::vector<int> test_order = random_ordering(n_p, derive_seed(trace.seed, {0x60}));

  Eigen::MatrixXd mu(T, n_p);
  Eigen::MatrixXd cov_sum = Eigen::MatrixXd::Zero(n_p, n_p);
  std::vector<Eigen::MatrixXd> covs(T);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd& ref = trace.n_latent() == 0 ? trace.Xs : trace.samples[t].W.back();
    const Eigen::MatrixXd query =
        trace.n_latent() == 0
            ? Xt
            : detail::map_latent_impl(trace, Xt, sets0, t, m_eff, opt.mean_map);
    if (trace.backend == Backend::vecchia) {
      const detail::JointMoments jm = detail::stacked_joint_moments(
          trace, t, ref, query, test_order, opt.m_pred, opt.condition_on_test);
      mu.row(t) = jm.mean.transpose();
      covs[t] = jm.cov;
    } else {
      const RetainedSample& s = trace.samples[t];
      const KernelSpec spec{trace.family, s.theta_w, s.tau2_hat, s.g};
      const DenseGP gp(ref, trace.Ys, spec);
      const DensePrediction dp = dense_predict(gp, query);
      mu.row(t) = dp.mean.transpose();
      covs[t] = dp.cov;
    }
  }
  for (int t = 0; t < T; ++t) cov_sum += covs[t];

  PredictionResult out;
  const Eigen::VectorXd mean_std = mu.colwise().mean().transpose();
  Eigen::MatrixXd cov_std = cov_sum / T;
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd dev = mu.row(t).transpose() - mean_std;
    cov_std.noalias() += (dev * dev.transpose()) / T;
  }
  const double ysd2 = trace.norm.y_sd * trace.norm.y_sd;
  out.mean = (trace.norm.y_mean + trace.norm.y_sd * mean_std.array()).matrix();
  out.joint_cov = ysd2 * cov_std;
  out.variance = out.joint_cov->diagonal();
  if (opt.retain_per_sample) {
    out.sample_means = (trace.norm.y_mean + trace.norm.y_sd * mu.array()).matrix();
    out.sample_vars.resize(T, n_p);
    for (int t = 0; t < T; ++t) out.sample_vars.row(t) = ysd2 * covs[t].diagonal().transpose();
  }
  return out;
}

}  // namespace vecdgp

#endif  // VECDGP_PREDICT_HPP

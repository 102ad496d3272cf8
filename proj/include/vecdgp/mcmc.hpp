#ifndef VECDGP_MCMC_HPP
#define VECDGP_MCMC_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vecdgp/conditioning.hpp"
#include "vecdgp/errors.hpp"
#include "vecdgp/model.hpp"
#include "vecdgp/rng.hpp"

namespace vecdgp {

// Chain controls and priors. The lengthscale prior is a Gamma truncated
// below at theta_min; proposals are multiplicative-uniform windows. Both are
// deliberate choices documented in the README, not canonical values.
struct SamplerConfig {
  int n_mcmc = 1000;
  int burn_in = 500;
  int thin = 1;
  std::uint64_t seed = 0;

  double theta_prior_shape = 1.5;
  double theta_prior_rate = 3.9 / 1.5;
  double theta_min = 1e-6;
  double prop_lower = 0.75;  // proposal window (l, u) around the current value
  double prop_upper = 1.3;

  bool sample_g = false;
  double g = 1e-8;  // fixed nugget, or the initial value when sampled
  double g_prior_mean = 0.01;

  int p = 0;      // latent width; 0 resolves to the input dimension
  int depth = 2;  // number of Gaussian layers; 1 is a plain GP
  int m = 25;     // conditioning-set size, capped at n-1 when fitting

  KernelFamily family = KernelFamily::matern52;
  Backend backend = Backend::vecchia;

  double theta_init_outer = 0.2;
  double theta_init_inner = 0.5;
  bool normalize_inputs = true;
  bool standardize_response = true;
  int max_ess_shrink = 10000;

  void validate() const {
    if (n_mcmc < 1) throw ConfigError("n_mcmc must be >= 1");
    if (burn_in < 0 || burn_in >= n_mcmc) throw ConfigError("burn_in must satisfy 0 <= burn_in < n_mcmc");
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (!(prop_lower > 0.0 && prop_lower < 1.0 && prop_upper > 1.0))
      throw ConfigError("proposal window must satisfy 0 < l < 1 < u");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (!(g >= 0.0)) throw ConfigError("g must be nonnegative");
    if (sample_g && !(g > 0.0)) throw ConfigError("sampled g needs a positive initial value");
    if (!(theta_init_outer > 0.0 && theta_init_inner > 0.0))
      throw ConfigError("lengthscale initial values must be positive");
    if (!(theta_prior_shape > 0.0 && theta_prior_rate > 0.0))
      throw ConfigError("lengthscale prior parameters must be positive");
    if (!(g_prior_mean > 0.0)) throw ConfigError("g prior mean must be positive");
  }
};

struct AcceptStats {
  std::vector<std::vector<std::int64_t>> theta_x_prop, theta_x_acc;  // [layer][node]
  std::int64_t theta_w_prop = 0, theta_w_acc = 0;
  std::int64_t g_prop = 0, g_acc = 0;
  std::int64_t ess_moves = 0, ess_evals = 0;
};

// One retained posterior draw (also used for the resume state).
struct RetainedSample {
  std::vector<Eigen::MatrixXd> W;       // latent layers, n x p each
  std::vector<Eigen::VectorXd> theta_x; // per latent layer, per node
  double theta_w = 0.0;
  double tau2_hat = 0.0;
  double g = 0.0;
};

// Everything fit() produces: the fixed plans, the retained samples, the
// resume state, and enough metadata to predict and to continue the chain.
struct DgpTrace {
  KernelFamily family = KernelFamily::matern52;
  Backend backend = Backend::vecchia;
  int n = 0, d = 0, p = 0, depth = 1, m = 0;
  std::uint64_t seed = 0;
  std::int64_t total_iterations = 0;
  SamplerConfig config;
  Normalization norm;
  Eigen::MatrixXd X_raw;
  Eigen::VectorXd Y_raw;
  Eigen::MatrixXd Xs;  // derived: scaled inputs
  Eigen::VectorXd Ys;  // derived: standardized response
  std::vector<ConditioningPlan> plans;  // latent layers first, outer last
  std::vector<RetainedSample> samples;
  RetainedSample final_state;
  std::array<std::uint64_t, 4> rng_state{};
  AcceptStats accept;
  std::vector<double> loglik_history;  // outer profiled loglik per iteration

  int n_latent() const { return depth - 1; }
  const ConditioningPlan& outer_plan() const { return plans.back(); }

  void refresh_derived() {
    Xs = norm.scale_x(X_raw);
    Ys = norm.standardize_y(Y_raw);
  }
};

// --- generic MCMC moves ----------------------------------------------------

struct EssOutcome {
  Eigen::VectorXd state;
  double loglik = 0.0;
  int evals = 0;
};

// One elliptical slice move for a variable with a mean-zero Gaussian prior:
// draw the slice height under the current loglik, then shrink an angular
// bracket [gamma - 2*pi, gamma] toward zero until a proposal on the ellipse
// through (current, nu) clears the slice. Termination is guaranteed because
// gamma -> 0 recovers the current state.
template <class LogLik>
EssOutcome ess_move(const Eigen::VectorXd& cur, const Eigen::VectorXd& nu,
                    double cur_loglik, LogLik&& loglik, Rng& rng, int max_shrink) {
  EssOutcome out;
  const double log_u = cur_loglik + std::log(rng.uniform());
  double gamma = rng.uniform() * 2.0 * M_PI;
  double lo = gamma - 2.0 * M_PI;
  double hi = gamma;
  for (int step = 0; step < max_shrink; ++step) {
    out.state = std::cos(gamma) * cur + std::sin(gamma) * nu;
    out.loglik = loglik(out.state);
    ++out.evals;
    if (out.loglik > log_u) return out;
    if (gamma < 0.0)
      lo = gamma;
    else
      hi = gamma;
    gamma = rng.uniform(lo, hi);
  }
  throw InternalError("elliptical slice bracket failed to close; likelihood is broken");
}

struct MhOutcome {
  double value = 0.0;
  double loglik = 0.0;
  bool accepted = false;
};

// Metropolis-Hastings with the multiplicative window v' ~ U(l*v, u*v). The
// v/v' factor corrects the proposal asymmetry. A proposal below support_min
// or one whose likelihood evaluation fails to factorize is rejected.
template <class LogLik, class LogPrior>
MhOutcome mh_multiplicative(double cur, double cur_loglik, LogLik&& loglik,
                            LogPrior&& log_prior, double lower, double upper,
                            double support_min, Rng& rng) {
  MhOutcome out{cur, cur_loglik, false};
  const double prop = rng.uniform(lower * cur, upper * cur);
  if (prop < support_min) return out;
  double prop_loglik;
  try {
    prop_loglik = loglik(prop);
  } catch (const FactorizationError&) {
    return out;
  }
  const double log_ratio = (prop_loglik + log_prior(prop) + std::log(cur)) -
                           (cur_loglik + log_prior(cur) + std::log(prop));
  if (std::log(rng.uniform()) < log_ratio) {
    out.value = prop;
    out.loglik = prop_loglik;
    out.accepted = true;
  }
  return out;
}

// --- Gibbs sampler ----------------------------------------------------------

// Latent layers carry unit scale and zero nugget; the outer layer carries
// the nugget and a profiled scale. Plans are fixed for the lifetime of a
// sampler; re-approximation constructs a new sampler.
class DgpSampler {
 public:
  DgpSampler(Eigen::MatrixXd Xs, Eigen::VectorXd Ys, SamplerConfig cfg, int p,
             std::vector<ConditioningPlan> plans, Rng rng)
      : Xs_(std::move(Xs)),
        Ys_(std::move(Ys)),
        cfg_(std::move(cfg)),
        n_(static_cast<int>(Xs_.rows())),
        p_(p),
        n_latent_(cfg_.depth - 1),
        plans_(std::move(plans)),
        rng_(rng) {
    Yo_ = to_ordered(plans_.back(), Ys_);
    W_.assign(n_latent_, Xs_.leftCols(p_));
    theta_x_.assign(n_latent_, Eigen::VectorXd::Constant(p_, cfg_.theta_init_inner));
    theta_w_ = cfg_.theta_init_outer;
    g_ = cfg_.g;
    stats_.theta_x_prop.assign(n_latent_, std::vector<std::int64_t>(p_, 0));
    stats_.theta_x_acc.assign(n_latent_, std::vector<std::int64_t>(p_, 0));
    rebuild_all();
  }

  void restore_state(const RetainedSample& s) {
    W_ = s.W;
    for (int l = 0; l < n_latent_; ++l) theta_x_[l] = s.theta_x[l];
    theta_w_ = s.theta_w;
    g_ = s.g;
    rebuild_all();
  }

  void set_rng_state(const std::array<std::uint64_t, 4>& s) { rng_.set_state(s); }

  // One full sweep: lengthscales per inner node, outer lengthscale, nugget
  // (when sampled), then one elliptical slice move per latent node.
  void gibbs_iteration() {
    for (int l = 0; l < n_latent_; ++l)
      for (int k = 0; k < p_; ++k) mh_update_lengthscale_latent(l, k);
    mh_update_lengthscale_outer();
    mh_update_nugget();
    for (int l = 0; l < n_latent_; ++l)
      for (int k = 0; k < p_; ++k) ess_update_node(l, k);
  }

  void mh_update_lengthscale_latent(int layer, int k) {
    ++stats_.theta_x_prop[layer][k];
    const Eigen::VectorXd wk = to_ordered(plans_[layer], W_[layer].col(k));
    LayerFactor cand;
    auto loglik = [&](double theta) {
      cand = LayerFactor::build(cfg_.backend, locs_below(layer), plans_[layer],
                                KernelSpec{cfg_.family, theta, 1.0, 0.0});
      return cand.unit_loglik(wk);
    };
    const MhOutcome res =
        mh_multiplicative(theta_x_[layer][k], latent_ll_[layer][k], loglik,
                          [this](double t) { return log_theta_prior(t); },
                          cfg_.prop_lower, cfg_.prop_upper, cfg_.theta_min, rng_);
    if (res.accepted) {
      ++stats_.theta_x_acc[layer][k];
      theta_x_[layer][k] = res.value;
      latent_F_[layer][k] = std::move(cand);
      latent_ll_[layer][k] = res.loglik;
    }
  }

  void mh_update_lengthscale_outer() {
    ++stats_.theta_w_prop;
    LayerFactor cand;
    ProfiledLoglik cand_prof;
    auto loglik = [&](double theta) {
      cand = LayerFactor::build(cfg_.backend, outer_locs(), plans_.back(),
                                KernelSpec{cfg_.family, theta, 1.0, g_});
      cand_prof = cand.profiled(Yo_);
      return cand_prof.loglik;
    };
    const MhOutcome res =
        mh_multiplicative(theta_w_, outer_prof_.loglik, loglik,
                          [this](double t) { return log_theta_prior(t); },
                          cfg_.prop_lower, cfg_.prop_upper, cfg_.theta_min, rng_);
    if (res.accepted) {
      ++stats_.theta_w_acc;
      theta_w_ = res.value;
      outer_F_ = std::move(cand);
      outer_prof_ = cand_prof;
    }
  }

  void mh_update_nugget() {
    if (!cfg_.sample_g) return;
    ++stats_.g_prop;
    LayerFactor cand;
    ProfiledLoglik cand_prof;
    auto loglik = [&](double g) {
      cand = LayerFactor::build(cfg_.backend, outer_locs(), plans_.back(),
                                KernelSpec{cfg_.family, theta_w_, 1.0, g});
      cand_prof = cand.profiled(Yo_);
      return cand_prof.loglik;
    };
    auto log_prior = [this](double g) { return -g / cfg_.g_prior_mean; };
    const MhOutcome res = mh_multiplicative(g_, outer_prof_.loglik, loglik, log_prior,
                                            cfg_.prop_lower, cfg_.prop_upper, 0.0, rng_);
    if (res.accepted) {
      ++stats_.g_acc;
      g_ = res.value;
      outer_F_ = std::move(cand);
      outer_prof_ = cand_prof;
    }
  }

  // Elliptical slice move for node k of latent layer `layer`, targeting the
  // density of everything above it times the node's own Gaussian prior.
  void ess_update_node(int layer, int k) {
    const bool top = layer == n_latent_ - 1;
    const Eigen::VectorXd z = rng_.normal_vector(n_);
    const Eigen::VectorXd nu =
        from_ordered(plans_[layer], latent_F_[layer][k].sample_prior_ordered(z));
    const double cur_ll = top ? outer_prof_.loglik : latent_layer_ll_sum(layer + 1);

    Eigen::MatrixXd Wprop = W_[layer];
    LayerFactor outer_cand;
    ProfiledLoglik outer_cand_prof;
    std::vector<LayerFactor> mid_cand;
    Eigen::VectorXd mid_cand_ll;

    auto loglik = [&](const Eigen::VectorXd& col) {
      Wprop.col(k) = col;
      try {
        if (top) {
          outer_cand = LayerFactor::build(cfg_.backend, Wprop, plans_.back(),
                                          KernelSpec{cfg_.family, theta_w_, 1.0, g_});
          outer_cand_prof = outer_cand.profiled(Yo_);
          return outer_cand_prof.loglik;
        }
        mid_cand.clear();
        mid_cand_ll.resize(p_);
        double total = 0.0;
        for (int j = 0; j < p_; ++j) {
          mid_cand.push_back(LayerFactor::build(
              cfg_.backend, Wprop, plans_[layer + 1],
              KernelSpec{cfg_.family, theta_x_[layer + 1][j], 1.0, 0.0}));
          mid_cand_ll[j] =
              mid_cand.back().unit_loglik(to_ordered(plans_[layer + 1], W_[layer + 1].col(j)));
          total += mid_cand_ll[j];
        }
        return total;
      } catch (const FactorizationError&) {
        // a numerically degenerate proposal counts as below the slice
        return -std::numeric_limits<double>::infinity();
      }
    };

    const EssOutcome res = ess_move(W_[layer].col(k).eval(), nu, cur_ll, loglik, rng_,
                                    cfg_.max_ess_shrink);
    stats_.ess_evals += res.evals;
    ++stats_.ess_moves;
    W_[layer].col(k) = res.state;
    if (top) {
      outer_F_ = std::move(outer_cand);
      outer_prof_ = outer_cand_prof;
    } else {
      latent_F_[layer + 1] = std::move(mid_cand);
      for (int j = 0; j < p_; ++j) latent_ll_[layer + 1][j] = mid_cand_ll[j];
    }
    latent_ll_[layer][k] =
        latent_F_[layer][k].unit_loglik(to_ordered(plans_[layer], W_[layer].col(k)));
  }

  // state access
  RetainedSample snapshot() const {
    RetainedSample s;
    s.W = W_;
    s.theta_x = theta_x_;
    s.theta_w = theta_w_;
    s.tau2_hat = outer_prof_.tau2_hat;
    s.g = g_;
    return s;
  }

  double outer_loglik() const { return outer_prof_.loglik; }
  double tau2_hat() const { return outer_prof_.tau2_hat; }
  const AcceptStats& stats() const { return stats_; }
  std::array<std::uint64_t, 4> rng_state() const { return rng_.state(); }

  // Fresh recomputation of the cached outer profiled loglik (cache-coherence
  // checks in tests).
  double recompute_outer_loglik() const {
    const LayerFactor f = LayerFactor::build(cfg_.backend, outer_locs(), plans_.back(),
                                             KernelSpec{cfg_.family, theta_w_, 1.0, g_});
    return f.profiled(Yo_).loglik;
  }

 private:
  const Eigen::MatrixXd& locs_below(int layer) const {
    return layer == 0 ? Xs_ : W_[layer - 1];
  }

  const Eigen::MatrixXd& outer_locs() const {
    return n_latent_ == 0 ? Xs_ : W_[n_latent_ - 1];
  }

  double latent_layer_ll_sum(int layer) const {
    double s = 0.0;
    for (int j = 0; j < p_; ++j) s += latent_ll_[layer][j];
    return s;
  }

  double log_theta_prior(double theta) const {
    return (cfg_.theta_prior_shape - 1.0) * std::log(theta) - cfg_.theta_prior_rate * theta;
  }

  void rebuild_all() {
    latent_F_.assign(n_latent_, {});
    latent_ll_.assign(n_latent_, Eigen::VectorXd::Zero(p_));
    for (int l = 0; l < n_latent_; ++l) {
      latent_F_[l].reserve(p_);
      for (int k = 0; k < p_; ++k) {
        latent_F_[l].push_back(
            LayerFactor::build(cfg_.backend, locs_below(l), plans_[l],
                               KernelSpec{cfg_.family, theta_x_[l][k], 1.0, 0.0}));
        latent_ll_[l][k] =
            latent_F_[l][k].unit_loglik(to_ordered(plans_[l], W_[l].col(k)));
      }
    }
    outer_F_ = LayerFactor::build(cfg_.backend, outer_locs(), plans_.back(),
                                  KernelSpec{cfg_.family, theta_w_, 1.0, g_});
    outer_prof_ = outer_F_.profiled(Yo_);
  }

  Eigen::MatrixXd Xs_;
  Eigen::VectorXd Ys_;
  SamplerConfig cfg_;
  int n_, p_, n_latent_;
  std::vector<ConditioningPlan> plans_;
  Eigen::VectorXd Yo_;  // response in outer ordering

  std::vector<Eigen::MatrixXd> W_;
  std::vector<Eigen::VectorXd> theta_x_;
  double theta_w_ = 0.0;
  double g_ = 0.0;

  std::vector<std::vector<LayerFactor>> latent_F_;
  std::vector<Eigen::VectorXd> latent_ll_;
  LayerFactor outer_F_;
  ProfiledLoglik outer_prof_;

  Rng rng_;
  AcceptStats stats_;
};

// --- fit / continue ---------------------------------------------------------

namespace detail {

inline void merge_stats(AcceptStats& into, const AcceptStats& add) {
  if (into.theta_x_prop.empty()) {
    into = add;
    return;
  }
  for (std::size_t l = 0; l < add.theta_x_prop.size(); ++l)
    for (std::size_t k = 0; k < add.theta_x_prop[l].size(); ++k) {
      into.theta_x_prop[l][k] += add.theta_x_prop[l][k];
      into.theta_x_acc[l][k] += add.theta_x_acc[l][k];
    }
  into.theta_w_prop += add.theta_w_prop;
  into.theta_w_acc += add.theta_w_acc;
  into.g_prop += add.g_prop;
  into.g_acc += add.g_acc;
  into.ess_moves += add.ess_moves;
  into.ess_evals += add.ess_evals;
}

inline void run_chain(DgpSampler& sampler, DgpTrace& trace, int iters, int burn_in,
                      int thin) {
  for (int t = 0; t < iters; ++t) {
    sampler.gibbs_iteration();
    ++trace.total_iterations;
    trace.loglik_history.push_back(sampler.outer_loglik());
    const std::int64_t k = trace.total_iterations - burn_in;
    if (k > 0 && k % thin == 0) trace.samples.push_back(sampler.snapshot());
  }
  trace.final_state = sampler.snapshot();
  trace.rng_state = sampler.rng_state();
  merge_stats(trace.accept, sampler.stats());
}

}  // namespace detail

// Fit a (deep) GP by MCMC. Inputs are rescaled to the unit cube and the
// response standardized internally; plans are built once (random ordering
// per layer, nearest neighbors in input space) and never change mid-chain.
inline DgpTrace fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                    const SamplerConfig& config) {
  config.validate();
  if (X.rows() < 2) throw InvalidArgument("fit: need at least two observations");
  if (X.rows() != Y.size()) throw InvalidArgument("fit: X/Y size mismatch");
  if (!X.allFinite() || !Y.allFinite()) throw InvalidArgument("fit: non-finite data");

  DgpTrace trace;
  trace.config = config;
  trace.family = config.family;
  trace.backend = config.backend;
  trace.seed = config.seed;
  trace.n = static_cast<int>(X.rows());
  trace.d = static_cast<int>(X.cols());
  trace.depth = config.depth;
  trace.p = config.depth > 1 ? (config.p > 0 ? config.p : trace.d) : 0;
  if (trace.p > trace.d)
    throw ConfigError("latent width p exceeds input dimension (latent layers start at W = X)");
  trace.m = std::min(config.m, trace.n - 1);
  trace.X_raw = X;
  trace.Y_raw = Y;
  trace.norm = Normalization::fit(X, Y, config.normalize_inputs, config.standardize_response);
  trace.refresh_derived();

  if (config.backend == Backend::dense) detail::warn_dense_size(trace.n);

  trace.plans.reserve(config.depth);
  for (int l = 0; l < config.depth; ++l) {
    const auto ordering =
        random_ordering(trace.n, derive_seed(config.seed, {0xA0, static_cast<std::uint64_t>(l)}));
    trace.plans.push_back(make_plan(trace.Xs, ordering, trace.m));
  }

  SamplerConfig resolved = config;
  resolved.m = trace.m;
  DgpSampler sampler(trace.Xs, trace.Ys, resolved, trace.p, trace.plans,
                     Rng(derive_seed(config.seed, {0xB0})));
  detail::run_chain(sampler, trace, config.n_mcmc, config.burn_in, config.thin);
  return trace;
}

// Extend a chain. With re_approx the conditioning sets of every layer whose
// locations are latent are rebuilt from the warped geometry of the last
// retained sample (orderings kept), previously retained samples are
// discarded as burn-in, and the chain restarts from the final state with a
// fresh burn-in; otherwise the existing chain resumes unchanged.
inline DgpTrace continue_fit(const DgpTrace& trace, int extra_iters, bool re_approx) {
  if (extra_iters < 0) throw InvalidArgument("continue_fit: negative iteration count");
  if (trace.samples.empty()) throw InvalidArgument("continue_fit: trace has no retained samples");
  DgpTrace out = trace;
  if (!re_approx && extra_iters == 0) return out;

  if (re_approx) {
    const RetainedSample& ref = out.samples.back();
    for (int l = 1; l < out.depth; ++l) {
      const Eigen::MatrixXd& locs = ref.W[l - 1];
      ConditioningPlan fresh = make_plan(locs, out.plans[l].ordering, out.m);
      out.plans[l] = std::move(fresh);
    }
    out.samples.clear();
    out.total_iterations = 0;
    out.loglik_history.clear();
  }

  SamplerConfig resolved = out.config;
  resolved.m = out.m;
  DgpSampler sampler(out.Xs, out.Ys, resolved, out.p, out.plans,
                     Rng(derive_seed(out.seed, {0xB0})));
  sampler.restore_state(out.final_state);
  sampler.set_rng_state(out.rng_state);
  detail::run_chain(sampler, out, extra_iters, out.config.burn_in, out.config.thin);
  return out;
}

}  // namespace vecdgp

#endif  // VECDGP_MCMC_HPP

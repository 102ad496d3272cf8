#include <catch2/catch_amalgamated.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vecdgp/dense_gp.hpp"
#include "vecdgp/design.hpp"
#include "vecdgp/predict.hpp"
#include "test_helpers.hpp"

using namespace vecdgp;

namespace {

// Trace with hand-picked samples and identity normalization, bypassing fit.
DgpTrace manual_trace(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, int depth, int p,
                      std::uint64_t seed = 9001) {
  DgpTrace t;
  t.family = KernelFamily::matern52;
  t.backend = Backend::vecchia;
  t.n = static_cast<int>(X.rows());
  t.d = static_cast<int>(X.cols());
  t.p = depth > 1 ? p : 0;
  t.depth = depth;
  t.m = std::min(25, t.n - 1);
  t.seed = seed;
  t.norm = Normalization::identity(t.d);
  t.X_raw = X;
  t.Y_raw = Y;
  t.refresh_derived();
  for (int l = 0; l < depth; ++l)
    t.plans.push_back(make_plan(t.Xs, random_ordering(t.n, seed + l), t.m));
  return t;
}

RetainedSample one_layer_sample(double theta, double tau2, double g) {
  RetainedSample s;
  s.theta_w = theta;
  s.tau2_hat = tau2;
  s.g = g;
  return s;
}

}  // namespace

TEST_CASE("one-layer independent prediction matches the dense oracle at full conditioning") {
  Rng rng(301);
  const int n = 60, n_p = 12;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::sin(5.0 * X(i, 0)) * std::cos(3.0 * X(i, 1));
  const Eigen::MatrixXd Xt = testutil::random_design(n_p, 2, rng);

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  const double theta = 0.12, tau2 = 1.4, g = 1e-7;
  trace.samples.push_back(one_layer_sample(theta, tau2, g));

  PredictOptions opt;
  opt.m_pred = n;  // condition on every training point
  const PredictionResult pred = predict_independent(trace, Xt, opt);

  const DenseGP gp(X, Y, KernelSpec{trace.family, theta, tau2, g});
  const DensePrediction dp = dense_predict(gp, Xt);
  CHECK((pred.mean - dp.mean).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((pred.variance - dp.cov.diagonal()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("one-layer joint prediction matches dense moments and the stacked identity") {
  Rng rng(303);
  const int n = 40, n_p = 8;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::cos(6.0 * X(i, 0)) + X(i, 1) * X(i, 1);
  const Eigen::MatrixXd Xt = testutil::random_design(n_p, 2, rng);

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  const double theta = 0.2, tau2 = 0.9, g = 1e-6;
  trace.samples.push_back(one_layer_sample(theta, tau2, g));

  PredictOptions opt;
  opt.m_pred = n + n_p - 1;  // full stacked conditioning
  const PredictionResult pred = predict_joint(trace, Xt, opt);
  REQUIRE(pred.joint_cov.has_value());

  const DenseGP gp(X, Y, KernelSpec{trace.family, theta, tau2, g});
  const DensePrediction dp = dense_predict(gp, Xt);
  CHECK((pred.mean - dp.mean).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((*pred.joint_cov - dp.cov).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((pred.variance - dp.cov.diagonal()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("joint without test-test conditioning equals independent prediction") {
  Rng rng(307);
  const int n = 30, n_p = 6;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = X(i, 0) - 2.0 * X(i, 1);
  const Eigen::MatrixXd Xt = testutil::random_design(n_p, 2, rng);

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  trace.samples.push_back(one_layer_sample(0.3, 1.1, 1e-8));

  PredictOptions lite;
  lite.m_pred = 10;
  PredictOptions joint = lite;
  joint.condition_on_test = false;

  SECTION("single sample: per-sample covariance is exactly diagonal") {
    const PredictionResult a = predict_independent(trace, Xt, lite);
    const PredictionResult b = predict_joint(trace, Xt, joint);
    REQUIRE(b.joint_cov.has_value());
    CHECK(a.mean == b.mean);          // identical arithmetic path
    CHECK(a.variance == b.variance);  // U_test diagonal: exact equality
    for (int i = 0; i < n_p; ++i)
      for (int j = 0; j < n_p; ++j)
        if (i != j) CHECK((*b.joint_cov)(i, j) == 0.0);
  }
  SECTION("multiple samples: diagonals still agree; off-diagonals carry the mean spread") {
    trace.samples.push_back(one_layer_sample(0.25, 1.3, 1e-8));
    const PredictionResult a = predict_independent(trace, Xt, lite);
    const PredictionResult b = predict_joint(trace, Xt, joint);
    CHECK(a.mean == b.mean);
    // aggregation orders differ between the two paths; agreement to rounding
    CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("coincident test points give a rank-deficient joint covariance") {
  Rng rng(311);
  const int n = 25;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::sin(3.0 * X(i, 0));
  Eigen::MatrixXd Xt(2, 2);
  Xt << 0.41, 0.37, 0.41, 0.37;  // identical pair

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  trace.samples.push_back(one_layer_sample(0.3, 1.0, 0.0));
  PredictOptions opt;
  opt.m_pred = n + 1;
  const PredictionResult pred = predict_joint(trace, Xt, opt);
  const Eigen::MatrixXd& C = *pred.joint_cov;
  CHECK(std::abs(C(0, 0) - C(0, 1)) < 1e-8);
  CHECK(std::abs(C(1, 1) - C(1, 0)) < 1e-8);
  CHECK(std::abs(pred.mean[0] - pred.mean[1]) < 1e-8);
}

TEST_CASE("interpolation at a training point with zero nugget") {
  Rng rng(313);
  const int n = 30;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::cos(4.0 * X(i, 0)) * X(i, 1);

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  trace.samples.push_back(one_layer_sample(0.3, 1.2, 0.0));
  PredictOptions opt;
  opt.m_pred = n;
  const PredictionResult pred = predict_independent(trace, X.topRows(3), opt);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(pred.mean[i] - Y[i]) < 1e-6);
    CHECK(pred.variance[i] < 1e-6);
  }
}

TEST_CASE("far-field prediction reverts to the prior") {
  const int n = 40;
  const Eigen::MatrixXd X = lhs(n, 2, 5150);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::sin(8.0 * X(i, 0));

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  trace.samples.push_back(one_layer_sample(0.02, 1.5, 1e-4));
  trace.samples.push_back(one_layer_sample(0.03, 1.2, 1e-4));
  Eigen::MatrixXd far(1, 2);
  far << 60.0, -45.0;
  PredictOptions opt;
  opt.m_pred = n;
  const PredictionResult pred = predict_independent(trace, far, opt);
  double avg_prior = 0.0;
  for (const auto& s : trace.samples) avg_prior += s.tau2_hat * (1.0 + s.g);
  avg_prior /= static_cast<double>(trace.samples.size());
  CHECK(std::abs(pred.mean[0]) < 1e-6);
  CHECK(std::abs(pred.variance[0] - avg_prior) < 0.1 * avg_prior);
}

TEST_CASE("aggregation follows the law of total variance") {
  Rng rng(317);
  const int n = 25;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = X(i, 0);
  const Eigen::MatrixXd Xt = testutil::random_design(5, 2, rng);

  DgpTrace trace = manual_trace(X, Y, 1, 0);
  trace.samples.push_back(one_layer_sample(0.3, 1.0, 1e-8));
  PredictOptions opt;
  opt.m_pred = 10;
  opt.retain_per_sample = true;

  SECTION("single sample: variance equals the per-sample variance") {
    const PredictionResult pred = predict_independent(trace, Xt, opt);
    CHECK((pred.variance.transpose() - pred.sample_vars.row(0)).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("identical samples: no mean-spread term") {
    trace.samples.push_back(trace.samples[0]);
    const PredictionResult pred = predict_independent(trace, Xt, opt);
    CHECK((pred.variance.transpose() - pred.sample_vars.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("distinct samples: variance dominates the average per-sample variance") {
    trace.samples.push_back(one_layer_sample(0.05, 2.0, 1e-8));
    const PredictionResult pred = predict_independent(trace, Xt, opt);
    const Eigen::VectorXd avg = pred.sample_vars.colwise().mean().transpose();
    for (int i = 0; i < 5; ++i) CHECK(pred.variance[i] >= avg[i] - 1e-14);
  }
}

TEST_CASE("map_latent identity warping interpolates the training rows") {
  Rng rng(319);
  const int n = 30;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = X.row(i).sum();

  DgpTrace trace = manual_trace(X, Y, 2, 2);
  RetainedSample s;
  s.W.assign(1, trace.Xs);  // identity warping
  s.theta_x.assign(1, Eigen::VectorXd::Constant(2, 0.15));
  s.theta_w = 0.3;
  s.tau2_hat = 1.0;
  s.g = 0.0;
  trace.samples.push_back(s);

  PredictOptions opt;
  opt.m_pred = n;
  opt.mean_map = true;
  const Eigen::MatrixXd mapped = map_latent(trace, X.topRows(4), 0, opt);
  CHECK((mapped - trace.Xs.topRows(4)).cwiseAbs().maxCoeff() < 1e-6);
  // the conditional variance collapses to the numerical noise floor, so a
  // drawn mapping stays within sqrt(eps)-scale of the row
  opt.mean_map = false;
  const Eigen::MatrixXd drawn = map_latent(trace, X.topRows(4), 0, opt);
  CHECK((drawn - trace.Xs.topRows(4)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("map_latent far point reverts to a unit-scale draw") {
  const int n = 30;
  const Eigen::MatrixXd X = lhs(n, 2, 31);
  Eigen::VectorXd Y = Eigen::VectorXd::Zero(n);
  DgpTrace trace = manual_trace(X, Y, 2, 2);
  RetainedSample s;
  s.W.assign(1, trace.Xs);
  s.theta_x.assign(1, Eigen::VectorXd::Constant(2, 0.05));
  s.theta_w = 0.3;
  s.tau2_hat = 1.0;
  s.g = 0.0;
  trace.samples.push_back(s);

  Eigen::MatrixXd far(1, 2);
  far << 90.0, 90.0;
  PredictOptions opt;
  opt.m_pred = n;
  opt.mean_map = true;
  CHECK(map_latent(trace, far, 0, opt).cwiseAbs().maxCoeff() < 1e-8);  // prior mean 0
  opt.mean_map = false;
  const Eigen::MatrixXd draw = map_latent(trace, far, 0, opt);
  CHECK(draw.cwiseAbs().maxCoeff() < 6.0);  // a unit-normal draw, not a blowup
  CHECK(draw.cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("latent moments match the dense oracle at full conditioning") {
  Rng rng(323);
  const int n = 40, n_p = 7;
  const Eigen::MatrixXd X = testutil::random_design(n, 1, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::sin(4.0 * X(i, 0));

  DgpTrace trace = manual_trace(X, Y, 2, 1);
  RetainedSample s;
  Eigen::MatrixXd W(n, 1);
  for (int i = 0; i < n; ++i) W(i, 0) = std::tanh(3.0 * trace.Xs(i, 0) - 1.5);
  s.W.assign(1, W);
  s.theta_x.assign(1, Eigen::VectorXd::Constant(1, 0.3));
  s.theta_w = 0.5;
  s.tau2_hat = 1.0;
  s.g = 1e-8;
  trace.samples.push_back(s);

  const Eigen::MatrixXd Xt = testutil::random_design(n_p, 1, rng);
  PredictOptions opt;
  opt.m_pred = n;
  opt.mean_map = true;
  const Eigen::MatrixXd mapped = map_latent(trace, Xt, 0, opt);

  // dense conditional mean of the latent node given W at the training rows
  const KernelSpec spec{trace.family, 0.3, 1.0, 0.0};
  const DenseGP gp(trace.Xs, W.col(0), spec);
  const DensePrediction dp = dense_predict(gp, trace.norm.scale_x(Xt));
  CHECK((mapped.col(0) - dp.mean).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("prediction is bit-identical across thread counts") {
#ifdef _OPENMP
  Rng rng(329);
  const int n = 35;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::sin(5.0 * X(i, 0));
  DgpTrace trace = manual_trace(X, Y, 2, 2);
  for (int t = 0; t < 4; ++t) {
    RetainedSample s;
    s.W.assign(1, trace.Xs * (1.0 + 0.05 * t));
    s.theta_x.assign(1, Eigen::VectorXd::Constant(2, 0.4 + 0.02 * t));
    s.theta_w = 0.25 + 0.01 * t;
    s.tau2_hat = 1.0 + 0.1 * t;
    s.g = 1e-6;
    trace.samples.push_back(s);
  }
  const Eigen::MatrixXd Xt = testutil::random_design(9, 2, rng);
  PredictOptions opt;
  opt.m_pred = 12;
  omp_set_num_threads(1);
  const PredictionResult a = predict_independent(trace, Xt, opt);
  omp_set_num_threads(4);
  const PredictionResult b = predict_independent(trace, Xt, opt);
  omp_set_num_threads(1);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
#endif
}

TEST_CASE("predict rejects bad arguments") {
  Rng rng(331);
  const Eigen::MatrixXd X = testutil::random_design(20, 2, rng);
  const Eigen::VectorXd Y = Eigen::VectorXd::Zero(20);
  DgpTrace trace = manual_trace(X, Y, 1, 0);
  const Eigen::MatrixXd Xt = testutil::random_design(3, 2, rng);
  CHECK_THROWS_AS(predict_independent(trace, Xt, {}), InvalidArgument);  // empty trace
  trace.samples.push_back(one_layer_sample(0.3, 1.0, 1e-8));
  CHECK_THROWS_AS(predict_independent(trace, testutil::random_design(3, 3, rng), {}),
                  InvalidArgument);
}

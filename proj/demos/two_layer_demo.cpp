// Minimal end-to-end usage: draw a Latin hypercube design on the 2d
// G-function, fit a two-layer Vecchia model, and print pointwise predictions
// with their uncertainty.

#include <cstdio>

#include "vecdgp/vecdgp.hpp"

int main() {
  using namespace vecdgp;

  const int n = 200, n_test = 8;
  const Eigen::MatrixXd X = lhs(n, 2, 42);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = gfunction(X.row(i));

  SamplerConfig cfg;
  cfg.n_mcmc = 600;
  cfg.burn_in = 300;
  cfg.thin = 3;
  cfg.seed = 42;
  const DgpTrace trace = fit(X, Y, cfg);
  std::printf("fit: %zu retained samples, final profiled loglik %.3f\n",
              trace.samples.size(), trace.loglik_history.back());

  const Eigen::MatrixXd Xtest = lhs(n_test, 2, 777);
  PredictOptions opt;
  opt.m_pred = 25;
  const PredictionResult pred = predict_independent(trace, Xtest, opt);
  std::printf("%10s %10s %12s %12s %10s\n", "x1", "x2", "mean", "sd", "truth");
  for (int i = 0; i < n_test; ++i)
    std::printf("%10.4f %10.4f %12.5f %12.5f %10.5f\n", Xtest(i, 0), Xtest(i, 1), pred.mean[i],
                std::sqrt(pred.variance[i]), gfunction(Xtest.row(i)));
  return 0;
}

#ifndef VECDGP_TEST_HELPERS_HPP
#define VECDGP_TEST_HELPERS_HPP

#include <Eigen/Dense>

#include "vecdgp/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_design(int n, int d, vecdgp::Rng& rng) {
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
  return X;
}

// One-sample Kolmogorov-Smirnov statistic against U(0,1); samples are copied.
inline double ks_statistic_uniform(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(samples[i] - lo, hi - samples[i]));
  }
  return d;
}

// Asymptotic critical value at alpha = 0.01.
inline double ks_critical_01(std::size_t n) {
  return 1.628 / std::sqrt(static_cast<double>(n));
}

}  // namespace testutil

#endif

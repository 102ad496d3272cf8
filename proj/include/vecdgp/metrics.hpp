#ifndef VECDGP_METRICS_HPP
#define VECDGP_METRICS_HPP

#include <cmath>

#include <Eigen/Dense>

#include "vecdgp/errors.hpp"

namespace vecdgp {

inline double rmse(const Eigen::VectorXd& mean, const Eigen::VectorXd& y_true) {
  if (mean.size() != y_true.size()) throw InvalidArgument("rmse: length mismatch");
  if (mean.size() == 0) throw InvalidArgument("rmse: empty input");
  return std::sqrt((mean - y_true).squaredNorm() / static_cast<double>(mean.size()));
}

// Root mean squared percentage error; the factor 100 sits inside the square.
inline double rmspe(const Eigen::VectorXd& mean, const Eigen::VectorXd& y_true) {
  if (mean.size() != y_true.size()) throw InvalidArgument("rmspe: length mismatch");
  if (mean.size() == 0) throw InvalidArgument("rmspe: empty input");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (y_true[i] == 0.0) throw InvalidArgument("rmspe: zero entry in y_true");
    const double r = 100.0 * (mean[i] - y_true[i]) / y_true[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(mean.size()));
}

namespace detail {

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace detail

// Continuous ranked probability score for Gaussian predictive marginals, in
// the standard nonnegative lower-is-better orientation:
//   mean_i sigma_i [ z_i (2 Phi(z_i) - 1) + 2 phi(z_i) - 1/sqrt(pi) ].
inline double crps(const Eigen::VectorXd& y_true, const Eigen::VectorXd& mean,
                   const Eigen::VectorXd& sd) {
  if (y_true.size() != mean.size() || y_true.size() != sd.size())
    throw InvalidArgument("crps: length mismatch");
  if (y_true.size() == 0) throw InvalidArgument("crps: empty input");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    if (!(sd[i] > 0.0)) throw InvalidArgument("crps: sd must be positive");
    const double z = (y_true[i] - mean[i]) / sd[i];
    acc += sd[i] * (z * (2.0 * detail::norm_cdf(z) - 1.0) + 2.0 * detail::norm_pdf(z) -
                    1.0 / std::sqrt(M_PI));
  }
  return acc / static_cast<double>(y_true.size());
}

}  // namespace vecdgp

#endif  // VECDGP_METRICS_HPP

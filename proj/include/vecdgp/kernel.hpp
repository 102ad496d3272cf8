#ifndef VECDGP_KERNEL_HPP
#define VECDGP_KERNEL_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "vecdgp/errors.hpp"

namespace vecdgp {

enum class KernelFamily { matern52, sqexp };

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::matern52 ? "matern52" : "sqexp";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "matern52") return KernelFamily::matern52;
  if (s == "sqexp") return KernelFamily::sqexp;
  throw ConfigError("unknown kernel family: " + s);
}

// Covariance hyperparameters. The lengthscale divides *squared* distance,
// the nugget is relative: diagonal covariance equals tau2 * (1 + g).
struct KernelSpec {
  KernelFamily family = KernelFamily::matern52;
  double theta = 1.0;  // lengthscale, squared-distance units
  double tau2 = 1.0;   // scale
  double g = 0.0;      // relative nugget

  void validate() const {
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw InvalidArgument("kernel lengthscale must be positive and finite");
    if (!(tau2 > 0.0) || !std::isfinite(tau2))
      throw InvalidArgument("kernel scale must be positive and finite");
    if (!(g >= 0.0) || !std::isfinite(g))
      throw InvalidArgument("kernel nugget must be nonnegative and finite");
  }
};

// Correlation k(sq_dist / theta); equals 1 at zero distance and decreases
// strictly with sq_dist for both families.
inline double correlation(double sq_dist, KernelFamily family, double theta) {
  if (!(sq_dist >= 0.0) || !std::isfinite(sq_dist))
    throw InvalidArgument("squared distance must be nonnegative and finite");
  if (!(theta > 0.0)) throw InvalidArgument("lengthscale must be positive");
  const double s = sq_dist / theta;
  if (family == KernelFamily::sqexp) return std::exp(-s);
  const double r = std::sqrt(s);
  static const double sqrt5 = std::sqrt(5.0);
  return (1.0 + sqrt5 * r + (5.0 / 3.0) * s) * std::exp(-sqrt5 * r);
}

namespace detail {

// Relative diagonal jitter used by every Cholesky retry in the library.
constexpr double kJitterRel = 1e-10;

// Unchecked scalar correlation for matrix assembly hot loops.
inline double corr_raw(double sq_dist, KernelFamily family, double theta) {
  const double s = sq_dist / theta;
  if (family == KernelFamily::sqexp) return std::exp(-s);
  const double r = std::sqrt(s);
  static const double sqrt5 = std::sqrt(5.0);
  return (1.0 + sqrt5 * r + (5.0 / 3.0) * s) * std::exp(-sqrt5 * r);
}

inline void check_design(const Eigen::MatrixXd& X, const char* name) {
  if (X.rows() < 1 || X.cols() < 1)
    throw InvalidArgument(std::string(name) + ": design matrix must be nonempty");
  if (!X.allFinite())
    throw InvalidArgument(std::string(name) + ": design matrix has non-finite entries");
}

}  // namespace detail

// Cross-covariance tau2 * k(||x1_i - x2_j||^2 / theta); no nugget.
inline Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                                  const KernelSpec& spec) {
  spec.validate();
  detail::check_design(X1, "X1");
  detail::check_design(X2, "X2");
  if (X1.cols() != X2.cols())
    throw InvalidArgument("cov_matrix: designs have mismatched dimension");
  const Eigen::Index n1 = X1.rows(), n2 = X2.rows();
  Eigen::MatrixXd K(n1, n2);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n1; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      const double d2 = (X1.row(i) - X2.row(j)).squaredNorm();
      K(i, j) = spec.tau2 * detail::corr_raw(d2, spec.family, spec.theta);
    }
  }
  return K;
}

// Symmetric covariance with the nugget folded into the diagonal:
// diag = tau2 * (1 + g). Exactly symmetric by construction.
inline Eigen::MatrixXd cov_matrix_sym(const Eigen::MatrixXd& X, const KernelSpec& spec) {
  spec.validate();
  detail::check_design(X, "X");
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = spec.tau2 * (1.0 + spec.g);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      const double v = spec.tau2 * detail::corr_raw(d2, spec.family, spec.theta);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace vecdgp

#endif  // VECDGP_KERNEL_HPP

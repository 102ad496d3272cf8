#ifndef VECDGP_MODEL_HPP
#define VECDGP_MODEL_HPP

#include <atomic>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "vecdgp/conditioning.hpp"
#include "vecdgp/dense_gp.hpp"
#include "vecdgp/errors.hpp"
#include "vecdgp/kernel.hpp"
#include "vecdgp/sparse_factor.hpp"

namespace vecdgp {

enum class Backend { vecchia, dense };

inline std::string to_string(Backend b) {
  return b == Backend::vecchia ? "vecchia" : "dense";
}

// Input rescaling to the unit cube and response standardization. Fitted
// once per chain and carried in the trace so predictions and scores can be
// mapped back to the original units.
struct Normalization {
  Eigen::VectorXd x_min, x_range;
  double y_mean = 0.0;
  double y_sd = 1.0;

  static Normalization identity(int d) {
    Normalization norm;
    norm.x_min = Eigen::VectorXd::Zero(d);
    norm.x_range = Eigen::VectorXd::Ones(d);
    return norm;
  }

  static Normalization fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                           bool scale_inputs, bool standardize_response) {
    Normalization norm = identity(static_cast<int>(X.cols()));
    if (scale_inputs) {
      norm.x_min = X.colwise().minCoeff();
      norm.x_range = (X.colwise().maxCoeff().transpose() - norm.x_min).eval();
      for (Eigen::Index j = 0; j < norm.x_range.size(); ++j)
        if (!(norm.x_range[j] > 0.0)) norm.x_range[j] = 1.0;  // constant column
    }
    if (standardize_response) {
      norm.y_mean = Y.mean();
      const double var = (Y.array() - norm.y_mean).square().sum() /
                         std::max<double>(1.0, static_cast<double>(Y.size()) - 1.0);
      norm.y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return norm;
  }

  Eigen::MatrixXd scale_x(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - x_min.transpose()).array().rowwise() /
           x_range.transpose().array();
  }

  Eigen::VectorXd standardize_y(const Eigen::VectorXd& Y) const {
    return (Y.array() - y_mean) / y_sd;
  }
};

// One Gaussian layer's factorization at unit scale. The Vecchia backend
// stores the sparse upper factor; the dense backend stores the Cholesky of
// the plan-ordered covariance, which is the same computation with the
// sparsity constraint removed, so matched-seed chains stay aligned.
struct LayerFactor {
  Backend backend = Backend::vecchia;
  SparseUpperFactor U;               // vecchia
  Eigen::LLT<Eigen::MatrixXd> llt;   // dense, plan-ordered
  double sum_log_diag = 0.0;         // sum_i log U^{ii} = -1/2 log|Sigma|

  static LayerFactor build(Backend backend, const Eigen::MatrixXd& locs,
                           const ConditioningPlan& plan, const KernelSpec& spec) {
    LayerFactor f;
    f.backend = backend;
    if (backend == Backend::vecchia) {
      f.U = build_U(locs, plan, spec);
      f.sum_log_diag = f.U.sum_log_diag;
    } else {
      const int n = plan.size();
      Eigen::MatrixXd ordered(n, locs.cols());
      for (int i = 0; i < n; ++i) ordered.row(i) = locs.row(plan.ordering[i]);
      f.llt = detail::chol_with_jitter(cov_matrix_sym(ordered, spec), spec.tau2);
      f.sum_log_diag = -f.llt.matrixLLT().diagonal().array().log().sum();
    }
    return f;
  }

  // ||U^T y||^2 (vecchia) or ||L^{-1} y||^2 (dense); y in ordering space.
  double quad_form(const Eigen::VectorXd& y_ordered) const {
    if (backend == Backend::vecchia) return U.transpose_times(y_ordered).squaredNorm();
    return llt.matrixL().solve(y_ordered).squaredNorm();
  }

  double unit_loglik(const Eigen::VectorXd& y_ordered) const {
    return sum_log_diag - 0.5 * quad_form(y_ordered);
  }

  ProfiledLoglik profiled(const Eigen::VectorXd& y_ordered) const {
    const double q = quad_form(y_ordered);
    if (!(q > 0.0) || !std::isfinite(q))
      throw NumericalError("profiled loglik: quadratic form is not positive");
    const double n = static_cast<double>(y_ordered.size());
    return {sum_log_diag - 0.5 * n * std::log(q), q / n};
  }

  // Draw from N(0, Sigma) given standard normals z; result in ordering space.
  Eigen::VectorXd sample_prior_ordered(const Eigen::VectorXd& z) const {
    if (backend == Backend::vecchia) return sample_prior(U, z);
    return llt.matrixL() * z;
  }
};

}  // namespace vecdgp

#endif  // VECDGP_MODEL_HPP

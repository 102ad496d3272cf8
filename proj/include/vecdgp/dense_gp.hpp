#ifndef VECDGP_DENSE_GP_HPP
#define VECDGP_DENSE_GP_HPP

#include <atomic>
#include <cmath>
#include <iostream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "vecdgp/errors.hpp"
#include "vecdgp/kernel.hpp"

namespace vecdgp {

namespace detail {

// Cholesky with the same jitter policy as the sparse per-column solves.
inline Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(Eigen::MatrixXd K, double tau2) {
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() == Eigen::Success) return llt;
  K.diagonal().array() += kJitterRel * tau2;
  llt.compute(K);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("dense covariance is not positive definite");
  return llt;
}

constexpr int kDenseSizeWarn = 3000;

// Warns once per process; the dense path is a correctness oracle, not a
// large-n solver.
inline void warn_dense_size(Eigen::Index n) {
  static std::atomic<bool> warned{false};
  if (n > kDenseSizeWarn && !warned.exchange(true))
    std::cerr << "[vecdgp] warning: dense path with n = " << n
              << " (cubic cost); sizes above " << kDenseSizeWarn
              << " are intended for the Vecchia path\n";
}

}  // namespace detail

// Un-approximated GP: holds the Cholesky factor of Sigma(X) and serves as
// the exactness oracle for the sparse path (and as the small-n model).
struct DenseGP {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  KernelSpec spec;
  Eigen::LLT<Eigen::MatrixXd> llt;

  DenseGP(Eigen::MatrixXd X_, Eigen::VectorXd Y_, const KernelSpec& spec_)
      : X(std::move(X_)), Y(std::move(Y_)), spec(spec_) {
    spec.validate();
    if (X.rows() != Y.size()) throw InvalidArgument("DenseGP: X/Y size mismatch");
    detail::warn_dense_size(X.rows());
    llt = detail::chol_with_jitter(cov_matrix_sym(X, spec), spec.tau2);
  }

  double half_log_det() const {
    return llt.matrixLLT().diagonal().array().log().sum();
  }
};

// -1/2 log|Sigma| - 1/2 Y^T Sigma^{-1} Y (multiplicative constant dropped).
inline double dense_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                           const KernelSpec& spec) {
  DenseGP gp(X, Y, spec);
  const double quad = gp.llt.matrixL().solve(gp.Y).squaredNorm();
  return -gp.half_log_det() - 0.5 * quad;
}

struct DensePrediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Conditional moments of the joint Gaussian: mean = Sigma(Xp,X) Sigma(X)^-1 Y,
// cov = Sigma(Xp) - Sigma(Xp,X) Sigma(X)^-1 Sigma(X,Xp). The test diagonal
// carries the nugget, so far-field variance reverts to tau2*(1+g).
inline DensePrediction dense_predict(const DenseGP& gp, const Eigen::MatrixXd& Xtest) {
  if (Xtest.cols() != gp.X.cols())
    throw InvalidArgument("dense_predict: dimension mismatch");
  const Eigen::MatrixXd Kcross = cov_matrix(Xtest, gp.X, gp.spec);
  const Eigen::VectorXd alpha = gp.llt.solve(gp.Y);
  DensePrediction out;
  out.mean = Kcross * alpha;
  const Eigen::MatrixXd Vt = gp.llt.matrixL().solve(Kcross.transpose());
  out.cov = cov_matrix_sym(Xtest, gp.spec) - Vt.transpose() * Vt;
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  return out;
}

// Blocks of the inverse of a 2x2-partitioned SPD matrix; `n1` is the size of
// the leading block. Kept as a tested lemma behind the joint predictive
// moment identities.
struct PartitionedInverse {
  Eigen::MatrixXd A11, A12, A21, A22;
};

inline PartitionedInverse partitioned_inverse_check(const Eigen::MatrixXd& B, int n1) {
  const int n = static_cast<int>(B.rows());
  if (B.cols() != n || n1 <= 0 || n1 >= n)
    throw InvalidArgument("partitioned_inverse_check: bad partition");
  const int n2 = n - n1;
  const Eigen::MatrixXd B11 = B.topLeftCorner(n1, n1);
  const Eigen::MatrixXd B12 = B.topRightCorner(n1, n2);
  const Eigen::MatrixXd B21 = B.bottomLeftCorner(n2, n1);
  const Eigen::MatrixXd B22 = B.bottomRightCorner(n2, n2);
  Eigen::LLT<Eigen::MatrixXd> llt11(B11), llt22(B22);
  if (llt11.info() != Eigen::Success || llt22.info() != Eigen::Success)
    throw FactorizationError("partitioned_inverse_check: singular diagonal block");
  const Eigen::MatrixXd S1 = B11 - B12 * llt22.solve(B21);  // Schur complements
  const Eigen::MatrixXd S2 = B22 - B21 * llt11.solve(B12);
  PartitionedInverse out;
  out.A11 = S1.llt().solve(Eigen::MatrixXd::Identity(n1, n1));
  out.A22 = S2.llt().solve(Eigen::MatrixXd::Identity(n2, n2));
  out.A12 = -llt11.solve(B12) * out.A22;
  out.A21 = -llt22.solve(B21) * out.A11;
  return out;
}

}  // namespace vecdgp

#endif  // VECDGP_DENSE_GP_HPP

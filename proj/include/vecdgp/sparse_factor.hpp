#ifndef VECDGP_SPARSE_FACTOR_HPP
#define VECDGP_SPARSE_FACTOR_HPP

#include <atomic>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "vecdgp/conditioning.hpp"
#include "vecdgp/errors.hpp"
#include "vecdgp/kernel.hpp"

namespace vecdgp {

// Regression weights and conditional variance of one point given its
// conditioning set: B = Sigma(x, Xc) Sigma(Xc)^-1, var = Sigma(x,x) - B Sigma(Xc, x).
struct ConditionalMoments {
  Eigen::VectorXd weights;
  double var = 0.0;
};

// Upper-triangular factor U of the precision matrix, Q = U U^T, stored
// column-compressed in ordering space. Column i carries the diagonal
// 1/sigma_i plus entries -B_i[a]/sigma_i at rows c(i); at most m+1 stored
// values per column.
struct SparseUpperFactor {
  int n = 0;
  int m = 0;
  std::vector<double> diag;       // U^{ii} = 1/sigma_i, strictly positive
  std::vector<int> col_ptr;       // size n+1, offsets into row_idx/vals
  std::vector<int> row_idx;       // conditioning positions j in c(i)
  std::vector<double> vals;       // U^{ji}
  double sum_log_diag = 0.0;      // sum_i log U^{ii} = -1/2 log|Sigma|

  // U^T y, one pass over columns.
  Eigen::VectorXd transpose_times(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double v = diag[i] * y[i];
      for (int a = col_ptr[i]; a < col_ptr[i + 1]; ++a) v += vals[a] * y[row_idx[a]];
      out[i] = v;
    }
    return out;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      U(i, i) = diag[i];
      for (int a = col_ptr[i]; a < col_ptr[i + 1]; ++a) U(row_idx[a], i) = vals[a];
    }
    return U;
  }
};

namespace detail {

// Scratch buffers reused across the columns a single thread processes.
struct MomentScratch {
  Eigen::MatrixXd Xc;     // gathered conditioning rows
  Eigen::MatrixXd K;      // conditioning covariance block
  Eigen::VectorXd cross;  // covariance of target vs conditioning rows
  Eigen::VectorXd b;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

// Conditional moments of the point at `target_row` given `k` rows of `locs`
// named by `set`. On an indefinite block, retries once with relative jitter,
// then throws FactorizationError tagged with `column`.
template <class Derived>
inline ConditionalMoments conditional_moments_impl(const Eigen::MatrixXd& locs,
                                                   const int* set, int k,
                                                   const Eigen::MatrixBase<Derived>& target_row,
                                                   const KernelSpec& spec,
                                                   MomentScratch& s, int column) {
  ConditionalMoments out;
  const double prior_var = spec.tau2 * (1.0 + spec.g);
  if (k == 0) {
    out.var = prior_var;
    return out;
  }
  const Eigen::Index d = locs.cols();
  s.Xc.resize(k, d);
  for (int a = 0; a < k; ++a) s.Xc.row(a) = locs.row(set[a]);
  s.K.resize(k, k);
  s.cross.resize(k);
  for (int a = 0; a < k; ++a) {
    s.K(a, a) = prior_var;
    for (int b2 = 0; b2 < a; ++b2) {
      const double d2 = (s.Xc.row(a) - s.Xc.row(b2)).squaredNorm();
      const double v = spec.tau2 * corr_raw(d2, spec.family, spec.theta);
      s.K(a, b2) = v;
      s.K(b2, a) = v;
    }
    const double d2 = (target_row - s.Xc.row(a)).squaredNorm();
    s.cross[a] = spec.tau2 * corr_raw(d2, spec.family, spec.theta);
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1)
      s.K.diagonal().array() += kJitterRel * spec.tau2;
    s.llt.compute(s.K);
    if (s.llt.info() != Eigen::Success) continue;
    s.b = s.llt.solve(s.cross);
    const double var = prior_var - s.cross.dot(s.b);
    if (var > 0.0) {
      out.weights = s.b;
      out.var = var;
      return out;
    }
  }
  throw FactorizationError(
      "conditional solve produced a non-positive variance at ordered index " +
          std::to_string(column),
      column);
}

}  // namespace detail

// Standalone conditional moments (set indexes rows of locs directly).
inline ConditionalMoments conditional_moments(const Eigen::MatrixXd& locs,
                                              std::span<const int> set,
                                              Eigen::Index target, const KernelSpec& spec) {
  detail::MomentScratch s;
  return detail::conditional_moments_impl(locs, set.data(), static_cast<int>(set.size()),
                                          locs.row(target), spec, s, static_cast<int>(target));
}

// Populate U column by column from the closed-form conditional moments.
// Columns are independent; output is bit-identical for any thread count.
inline SparseUpperFactor build_U(const Eigen::MatrixXd& locs, const ConditioningPlan& plan,
                                 const KernelSpec& spec) {
  spec.validate();
  const int n = plan.size();
  if (locs.rows() != n) throw InvalidArgument("build_U: locations/plan size mismatch");
  SparseUpperFactor U;
  U.n = n;
  U.m = plan.m;
  U.diag.resize(n);
  U.col_ptr = plan.set_ptr;
  U.row_idx = plan.set_idx;
  U.vals.resize(plan.set_idx.size());

  std::atomic<bool> failed{false};
  std::exception_ptr failure;
#pragma omp parallel
  {
    detail::MomentScratch scratch;
    std::vector<int> rows;
#pragma omp for schedule(dynamic, 16)
    for (int i = 0; i < n; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        const auto set = plan.set(i);
        const int k = static_cast<int>(set.size());
        rows.resize(k);
        for (int a = 0; a < k; ++a) rows[a] = plan.ordering[set[a]];
        const ConditionalMoments cm = detail::conditional_moments_impl(
            locs, rows.data(), k, locs.row(plan.ordering[i]), spec, scratch, i);
        const double sigma = std::sqrt(cm.var);
        U.diag[i] = 1.0 / sigma;
        for (int a = 0; a < k; ++a) U.vals[plan.set_ptr[i] + a] = -cm.weights[a] / sigma;
      } catch (...) {
#pragma omp critical
        {
          if (!failure) failure = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  double sld = 0.0;
  for (int i = 0; i < n; ++i) sld += std::log(U.diag[i]);
  U.sum_log_diag = sld;
  return U;
}

// log L(Y) = sum_i log U^{ii} - 1/2 ||U^T Y||^2, constant (2*pi)^{-n/2} dropped.
// Y must be in ordering space.
inline double vecchia_loglik(const SparseUpperFactor& U, const Eigen::VectorXd& y) {
  if (y.size() != U.n) throw InvalidArgument("vecchia_loglik: size mismatch");
  return U.sum_log_diag - 0.5 * U.transpose_times(y).squaredNorm();
}

// Scale-profiled objective for a factor built at tau2 = 1: the scale is
// replaced by its plug-in estimate tau2_hat = Y^T U U^T Y / n under the
// reference prior, leaving log l = sum log U^{ii} - (n/2) log(Y^T U U^T Y).
struct ProfiledLoglik {
  double loglik = 0.0;
  double tau2_hat = 0.0;
};

inline ProfiledLoglik profiled_loglik(const SparseUpperFactor& U, const Eigen::VectorXd& y) {
  if (y.size() != U.n) throw InvalidArgument("profiled_loglik: size mismatch");
  const double q = U.transpose_times(y).squaredNorm();
  if (!(q > 0.0) || !std::isfinite(q))
    throw NumericalError("profiled_loglik: quadratic form is not positive");
  const double n = static_cast<double>(U.n);
  return {U.sum_log_diag - 0.5 * n * std::log(q), q / n};
}

// Draw from N(0, (U U^T)^{-1}) by forward-solving U^T y = z in ordering
// sequence; z must be standard normal. Returns the draw in ordering space.
inline Eigen::VectorXd sample_prior(const SparseUpperFactor& U, const Eigen::VectorXd& z) {
  if (z.size() != U.n) throw InvalidArgument("sample_prior: size mismatch");
  Eigen::VectorXd y(U.n);
  for (int i = 0; i < U.n; ++i) {
    if (!(U.diag[i] > 0.0))
      throw FactorizationError("sample_prior: non-positive diagonal", i);
    double acc = z[i];
    for (int a = U.col_ptr[i]; a < U.col_ptr[i + 1]; ++a) acc -= U.vals[a] * y[U.row_idx[a]];
    y[i] = acc / U.diag[i];
  }
  return y;
}

}  // namespace vecdgp

#endif  // VECDGP_SPARSE_FACTOR_HPP

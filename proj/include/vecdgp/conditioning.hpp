#ifndef VECDGP_CONDITIONING_HPP
#define VECDGP_CONDITIONING_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vecdgp/errors.hpp"
#include "vecdgp/rng.hpp"

namespace vecdgp {

// An ordering of the data plus, for each ordered position i, the set c(i)
// of earlier positions it conditions on. Sets are stored flattened
// (CSR-style) and sorted ascending; c(0) is empty and |c(i)| = min(m, i).
// Once a chain has been initialized on a plan it must not be mutated: a
// re-approximation builds a fresh plan and restarts.
struct ConditioningPlan {
  int m = 0;
  std::vector<int> ordering;  // position -> original row index
  std::vector<int> set_ptr;   // size n+1
  std::vector<int> set_idx;   // conditioning positions, ascending per set

  int size() const { return static_cast<int>(ordering.size()); }

  std::span<const int> set(int i) const {
    return {set_idx.data() + set_ptr[i],
            static_cast<std::size_t>(set_ptr[i + 1] - set_ptr[i])};
  }
};

// Uniformly random permutation of {0..n-1} via Fisher-Yates.
inline std::vector<int> random_ordering(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_ordering: n must be >= 1");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

namespace detail {

// Pick the k candidates nearest to `target` (squared Euclidean distance,
// ties broken by lower index), returned sorted ascending by index.
// `cand_d2[j]` must hold the distance of candidate j; indices run 0..n_cand-1.
inline void select_nearest(const std::vector<double>& cand_d2, int n_cand, int k,
                           std::vector<int>& scratch, std::vector<int>& out) {
  scratch.resize(n_cand);
  std::iota(scratch.begin(), scratch.end(), 0);
  auto closer = [&cand_d2](int a, int b) {
    return cand_d2[a] < cand_d2[b] || (cand_d2[a] == cand_d2[b] && a < b);
  };
  if (k < n_cand)
    std::nth_element(scratch.begin(), scratch.begin() + k, scratch.end(), closer);
  out.assign(scratch.begin(), scratch.begin() + k);
  std::sort(out.begin(), out.end());
}

}  // namespace detail

// Nearest-neighbor conditioning sets for locations already arranged in
// ordering sequence: c(i) holds the min(m, i) earlier rows closest to row i.
// Exact brute-force search; deterministic regardless of thread count.
inline ConditioningPlan nn_conditioning(const Eigen::MatrixXd& ordered_locs, int m) {
  if (!ordered_locs.allFinite())
    throw InvalidArgument("nn_conditioning: locations must be finite");
  if (m < 1) throw InvalidArgument("nn_conditioning: m must be >= 1");
  const int n = static_cast<int>(ordered_locs.rows());
  ConditioningPlan plan;
  plan.m = m;
  plan.ordering.resize(n);
  std::iota(plan.ordering.begin(), plan.ordering.end(), 0);
  std::vector<std::vector<int>> sets(n);
#pragma omp parallel
  {
    std::vector<double> d2;
    std::vector<int> scratch;
#pragma omp for schedule(dynamic, 32)
    for (int i = 1; i < n; ++i) {
      const int k = std::min(m, i);
      d2.resize(i);
      for (int j = 0; j < i; ++j)
        d2[j] = (ordered_locs.row(i) - ordered_locs.row(j)).squaredNorm();
      detail::select_nearest(d2, i, k, scratch, sets[i]);
    }
  }
  plan.set_ptr.resize(n + 1);
  plan.set_ptr[0] = 0;
  for (int i = 0; i < n; ++i)
    plan.set_ptr[i + 1] = plan.set_ptr[i] + static_cast<int>(sets[i].size());
  plan.set_idx.reserve(plan.set_ptr[n]);
  for (int i = 0; i < n; ++i)
    plan.set_idx.insert(plan.set_idx.end(), sets[i].begin(), sets[i].end());
  return plan;
}

// Plan with a given ordering: neighbors are searched in the geometry of
// `locs` (rows in original index space) but set membership and storage are
// in ordered positions.
inline ConditioningPlan make_plan(const Eigen::MatrixXd& locs,
                                  const std::vector<int>& ordering, int m) {
  const int n = static_cast<int>(locs.rows());
  if (static_cast<int>(ordering.size()) != n)
    throw InvalidArgument("make_plan: ordering size mismatch");
  Eigen::MatrixXd ordered(n, locs.cols());
  for (int i = 0; i < n; ++i) ordered.row(i) = locs.row(ordering[i]);
  ConditioningPlan plan = nn_conditioning(ordered, m);
  plan.ordering = ordering;
  return plan;
}

// Nearest-neighbor sets of query rows against a fixed set of reference rows
// (used for prediction conditioning). Each set holds min(m, n_ref) indices
// into `ref`, ascending.
inline std::vector<std::vector<int>> nn_query_sets(const Eigen::MatrixXd& ref,
                                                   const Eigen::MatrixXd& query, int m) {
  if (ref.cols() != query.cols())
    throw InvalidArgument("nn_query_sets: dimension mismatch");
  if (m < 1) throw InvalidArgument("nn_query_sets: m must be >= 1");
  const int n_ref = static_cast<int>(ref.rows());
  const int n_q = static_cast<int>(query.rows());
  const int k = std::min(m, n_ref);
  std::vector<std::vector<int>> sets(n_q);
#pragma omp parallel
  {
    std::vector<double> d2(n_ref);
    std::vector<int> scratch;
#pragma omp for schedule(dynamic, 16)
    for (int q = 0; q < n_q; ++q) {
      for (int j = 0; j < n_ref; ++j)
        d2[j] = (query.row(q) - ref.row(j)).squaredNorm();
      detail::select_nearest(d2, n_ref, k, scratch, sets[q]);
    }
  }
  return sets;
}

// Apply / invert the plan ordering on a vector.
inline Eigen::VectorXd to_ordered(const ConditioningPlan& plan, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < plan.size(); ++i) out[i] = v[plan.ordering[i]];
  return out;
}

inline Eigen::VectorXd from_ordered(const ConditioningPlan& plan, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < plan.size(); ++i) out[plan.ordering[i]] = v[i];
  return out;
}

}  // namespace vecdgp

#endif  // VECDGP_CONDITIONING_HPP

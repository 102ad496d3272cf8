#ifndef VECDGP_DESIGN_HPP
#define VECDGP_DESIGN_HPP

#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "vecdgp/errors.hpp"
#include "vecdgp/rng.hpp"

namespace vecdgp {

// Latin hypercube sample on [0,1]^d: per column, a random permutation of the
// n strata with one uniformly jittered point per stratum.
inline Eigen::MatrixXd lhs(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("lhs: n and d must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd X(n, d);
  std::vector<int> strata(n);
  for (int j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const auto k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
      std::swap(strata[i], strata[k]);
    }
    for (int i = 0; i < n; ++i) X(i, j) = (strata[i] + rng.uniform()) / n;
  }
  return X;
}

// Affine map of a unit-cube design onto a box given per-dimension bounds.
inline Eigen::MatrixXd scale_to_box(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi) {
  if (lo.size() != unit.cols() || hi.size() != unit.cols())
    throw InvalidArgument("scale_to_box: bounds dimension mismatch");
  Eigen::MatrixXd out = unit;
  for (Eigen::Index j = 0; j < unit.cols(); ++j)
    out.col(j) = (lo[j] + (hi[j] - lo[j]) * unit.col(j).array()).matrix();
  return out;
}

}  // namespace vecdgp

#endif  // VECDGP_DESIGN_HPP

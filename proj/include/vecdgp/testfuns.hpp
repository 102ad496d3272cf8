#ifndef VECDGP_TESTFUNS_HPP
#define VECDGP_TESTFUNS_HPP

#include <cmath>

#include <Eigen/Dense>

#include "vecdgp/errors.hpp"

namespace vecdgp {

// Second variation of the fourth Schaffer function on [-2,2]^2:
// f = 0.5 + (cos^2(sin|x1^2 - x2^2|) - 0.5) / (1 + 0.001 (x1^2 + x2^2))^2.
inline double schaffer2(double x1, double x2) {
  if (!(std::abs(x1) <= 2.0 && std::abs(x2) <= 2.0))
    throw InvalidArgument("schaffer2: point outside [-2,2]^2");
  const double c = std::cos(std::sin(std::abs(x1 * x1 - x2 * x2)));
  const double den = 1.0 + 0.001 * (x1 * x1 + x2 * x2);
  return 0.5 + (c * c - 0.5) / (den * den);
}

inline double schaffer2(const Eigen::RowVectorXd& x) {
  if (x.size() != 2) throw InvalidArgument("schaffer2: expects a 2-vector");
  return schaffer2(x[0], x[1]);
}

// G-function on the unit cube: prod_i (|4 x_i - 2| + a_i) / (1 + a_i),
// a_i = (i - 2) / 2 with 1-based i.
inline double gfunction(const Eigen::RowVectorXd& x) {
  if (x.size() < 1) throw InvalidArgument("gfunction: d must be >= 1");
  double prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw InvalidArgument("gfunction: point outside the unit cube");
    const double a = (static_cast<double>(i + 1) - 2.0) / 2.0;
    prod *= (std::abs(4.0 * x[i] - 2.0) + a) / (1.0 + a);
  }
  return prod;
}

}  // namespace vecdgp

#endif  // VECDGP_TESTFUNS_HPP

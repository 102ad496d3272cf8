#ifndef VECDGP_ERRORS_HPP
#define VECDGP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vecdgp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad caller input: dimension mismatches, non-finite values, out-of-domain points.
struct InvalidArgument : Error {
  using Error::Error;
};

// Malformed files or unusable data (NaN cells, ragged rows).
struct DataError : Error {
  using Error::Error;
};

// Unparseable or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// A conditional solve produced an indefinite block or non-positive variance.
// `column` is the (0-based) ordered index whose solve failed, or -1 for a
// whole-matrix factorization.
struct FactorizationError : Error {
  int column;
  explicit FactorizationError(const std::string& what, int column_ = -1)
      : Error(what), column(column_) {}
};

// Numerical failure outside factorization (e.g. zero quadratic form).
struct NumericalError : Error {
  using Error::Error;
};

// Broken internal invariant (e.g. elliptical slice bracket never closing).
struct InternalError : Error {
  using Error::Error;
};

}  // namespace vecdgp

#endif  // VECDGP_ERRORS_HPP

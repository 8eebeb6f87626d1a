#pragma once

#include <stdexcept>
#include <string>

namespace gna {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments: dimension mismatches, gamma not summing to one, bad kappa, ...
struct InputError : Error {
  using Error::Error;
};

// Invalid configuration: empty method list, step size too large, beta = 0, ...
struct ConfigError : Error {
  using Error::Error;
};

// Too few history columns for the requested operation (e.g. C needs N >= 2).
struct InsufficientHistoryError : Error {
  using Error::Error;
};

// Gram matrix singular with no regularization to fall back on.
struct SingularGramError : Error {
  using Error::Error;
};

// 1' M^-1 1 vanished; the normalized solution is undefined.
struct DegenerateNormalizationError : Error {
  using Error::Error;
};

// Inner (N-1)x(N-1) system of a factored preconditioner is singular.
struct PreconditionerError : Error {
  using Error::Error;
};

// Dense quasi-Newton update undefined (e.g. SR-k denominator singular).
struct UpdateUndefinedError : Error {
  using Error::Error;
};

// Method cannot run in the online loop (GMRES).
struct UnsupportedOnlineError : Error {
  using Error::Error;
};

// Dataset / output file problems.
struct IoError : Error {
  using Error::Error;
};

}  // namespace gna

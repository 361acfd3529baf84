#pragma once

#include <stdexcept>
#include <string>

namespace fui {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation's precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long iteration = -1)
      : Error(iteration < 0 ? what
                            : what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  /// Iteration at which the failure was detected, or -1 outside iterative code.
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// File ingestion or persistence failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Unlearning cannot be defined for the request (e.g. the run has a single client).
class UnlearningError : public Error {
 public:
  using Error::Error;
};

}  // namespace fui

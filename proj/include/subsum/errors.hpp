#pragma once

#include <stdexcept>
#include <string>

namespace subsum {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input matrix/basis does not have the required rank.
struct RankError : Error {
  using Error::Error;
};

// A linear system that the method requires to be invertible is singular
// (overlapping range/kernel, singular Gram operator, ...).
struct SingularError : Error {
  using Error::Error;
};

// A stated precondition does not hold (r(E) not in the required range,
// m < n-1, dimension mismatch, ...).
struct PreconditionError : Error {
  using Error::Error;
};

// An iterative method did not converge within its budget.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double last_value)
      : Error(what), last_iterate(last_value) {}
  double last_iterate;
};

// Tensor-power dimension cap exceeded.
struct SizeCapError : Error {
  using Error::Error;
};

// Problem-file syntax or consistency error.
struct ParseError : Error {
  ParseError(const std::string& what, int line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_number(line) {}
  int line_number;
};

}  // namespace subsum

#pragma once

#include <stdexcept>
#include <string>

namespace qaspect {

/// Base class for all qaspect errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input: malformed files, out-of-range parameters, violated preconditions.
/// The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Numerical failure: solver non-convergence, loss of positivity, etc.
/// The CLI maps this to exit code 3.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

}  // namespace qaspect

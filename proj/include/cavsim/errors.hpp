#pragma once

#include <stdexcept>
#include <string>

namespace cavsim {

/// Bad inputs: invalid parameters, malformed files, schema violations.
/// The CLI maps this family to exit code 2.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical trouble at runtime: non-convergence, failed fits, quadrature
/// that does not settle.  The CLI maps this family to exit code 1.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cavsim

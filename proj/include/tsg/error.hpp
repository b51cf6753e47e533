#pragma once

#include <stdexcept>
#include <string>

namespace tsg {

/// Malformed input, violated precondition, or unreadable data.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed (non-convergence, loss of definiteness).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tsg

#pragma once

#include <stdexcept>
#include <string>

namespace topm {

/// Precondition broken by the caller (bad dimensions, out-of-range parameter).
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed instance or result file.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Target vector outside the span of the arm features.
struct InfeasibleDesign : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric search failed to terminate inside the representable range.
struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

}  // namespace topm

#pragma once

#include <stdexcept>
#include <string>

namespace ddm {

// Argument combination the operation does not accept.
struct usage_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Coordinate or value outside its domain.
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Enumeration or lattice larger than the configured budget.
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Score ratio with a zero denominator.
struct undefined_score : std::domain_error {
  using std::domain_error::domain_error;
};

} // namespace ddm

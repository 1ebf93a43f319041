#pragma once

#include <stdexcept>
#include <string>

namespace lvj {

/// Inconsistent dimensions or malformed model structure.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state argument outside the positive orthant.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The jump kernel produced 1 + H_i <= 0 somewhere it was evaluated.
class KernelAdmissibilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Violated operation precondition (p outside (0,1), sum of weights >= 1, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lvj

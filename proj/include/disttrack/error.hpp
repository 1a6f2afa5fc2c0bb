#pragma once

#include <stdexcept>

namespace disttrack {

// Raised when a protocol breaks the communication model, e.g. a handler
// emits a message on behalf of an endpoint that was not just activated.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid parameter combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. finalizing a summary twice.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace disttrack

#pragma once

#include <stdexcept>
#include <string>

namespace expfilt {

// Bad user input: malformed config files, out-of-range parameters.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated call contract: mismatched grids, missing prerequisites.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failure: blow-up, loss of definiteness, cap overflow.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace expfilt

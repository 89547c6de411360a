#pragma once

#include <stdexcept>
#include <string>

namespace bilbao {

/// Invalid configuration or budget: reported before any objective call.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed input data (dimension mismatch, non-finite values, empty sets).
class DataError : public std::invalid_argument {
 public:
  explicit DataError(const std::string& what) : std::invalid_argument(what) {}
};

/// Factorization or other numerical failure that survived jitter escalation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bilbao

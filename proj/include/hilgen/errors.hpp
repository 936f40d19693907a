#pragma once

#include <stdexcept>
#include <string>

namespace hilgen {

// Error families map onto the CLI exit codes: ConfigError -> 1,
// DataError -> 2, ServiceError -> 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ServiceError : std::runtime_error {
  explicit ServiceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hilgen

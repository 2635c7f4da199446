#pragma once

#include <stdexcept>
#include <string>

namespace hlr {

// Error families map onto distinct CLI exit codes, so keep them separate:
// ConfigError -> 2, DataError -> 3, SolverError -> 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hlr

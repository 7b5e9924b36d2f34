#pragma once

#include <stdexcept>
#include <string>

namespace spectre {

/// Malformed or unreadable input data (CSV parse failures, schema mismatches).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Optimizer failure: divergence, non-finite objective, or iteration blow-up.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid experiment configuration (bad grids, missing fields, bad paths).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spectre

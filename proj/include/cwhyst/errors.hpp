#pragma once

#include <stdexcept>
#include <string>

namespace cwhyst {

// Error categories used across the library. The CLI maps them to exit codes:
// ConfigError/DomainError -> 2, ResourceError -> 3,
// NumericalError/StatisticalError -> 4.

struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

struct RangeError : std::out_of_range {
    explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct StatisticalError : std::runtime_error {
    explicit StatisticalError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cwhyst

#pragma once

#include <stdexcept>
#include <string>

namespace mvtc {

// Bad user input: malformed config files, invalid market parameters.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The requested target mean is outside the solvable interval.
struct FeasibilityError : std::runtime_error {
    explicit FeasibilityError(const std::string& what) : std::runtime_error(what) {}
};

// Internal numerical failure: lost bracket, Newton divergence, obstacle violation.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mvtc

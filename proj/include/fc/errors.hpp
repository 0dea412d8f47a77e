#pragma once

#include <stdexcept>
#include <string>

namespace fc {

/// Inconsistent inputs: mismatched curve spaces, bad schema, invalid model wiring.
struct config_error : std::invalid_argument {
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside the mathematical domain of an operation.
struct domain_error : std::domain_error {
    explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

/// Numerical failure: overflow, divergent transform, singular system.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fc

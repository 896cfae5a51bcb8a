#pragma once

#include <stdexcept>
#include <string>

namespace sfc {

// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or incompatible data: bad magic, truncation, shape/mask
// mismatches between artifacts (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: NaN/inf where finite values are required (CLI exit code 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: operation invoked in the wrong state or with inconsistent shapes.
class StateError : public std::logic_error {
public:
    explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace sfc

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace evcs {

/// Raised when an input file or record violates the documented schema.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a trace, state or scenario is internally inconsistent.
class ModelConsistencyError : public std::logic_error {
public:
    explicit ModelConsistencyError(const std::string& msg) : std::logic_error(msg) {}
};

/// Raised when a configuration value is out of its documented range.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace evcs

#pragma once

#include <stdexcept>
#include <string>

namespace vagn {

// Malformed inputs: shape mismatches, bad file schemas, config conflicts.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failures: NaN/Inf produced where finite values are required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures: missing files, unwritable outputs.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vagn

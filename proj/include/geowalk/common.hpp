#pragma once

#include <stdexcept>
#include <string>

namespace geowalk {

// Invalid user-supplied configuration (bad fields, malformed literals).
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation exceeded an explicit budget (enumeration size, truncation
// radius, representation size).  The CLI maps this to exit code 3.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace geowalk

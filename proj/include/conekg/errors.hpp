#pragma once

#include <stdexcept>
#include <string>

namespace conekg {

// Error taxonomy mirrors the CLI exit codes: usage -> 1, data -> 2,
// divergence -> 3. Everything else is a plain exception (exit 1).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace conekg

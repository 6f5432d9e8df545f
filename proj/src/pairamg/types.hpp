#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pairamg {

using index_t = std::int64_t;
using real_t = double;

/// Error categories surfaced across the library and mirrored by the C API.
enum class ErrorCode {
    invalid_argument,
    contract_violation,
    missing_row,
    singular_smoother,
    stagnation,
    breakdown,
    deadlock,
    parse_error,
    io_error,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::contract_violation: return "contract_violation";
        case ErrorCode::missing_row: return "missing_row";
        case ErrorCode::singular_smoother: return "singular_smoother";
        case ErrorCode::stagnation: return "stagnation";
        case ErrorCode::breakdown: return "breakdown";
        case ErrorCode::deadlock: return "deadlock";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

}  // namespace pairamg

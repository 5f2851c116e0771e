#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace porosplit {

/// Failure categories raised by the library. The CLI maps each category to a
/// distinct process exit code (see cli.hpp).
enum class ErrorCode {
    SingularMatrix,
    NotConverged,
    NotSymmetric,
    DimensionMismatch,
    UnsupportedOrder,
    IncompleteHistory,
    NotFound,
    InvalidParameter,
    MissingConstants,
    NotScalarPressure,
    MaxInnerExceeded,
    SolverFailure,
    UsageError,
    ValidationError,
    IoError,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorCode::IncompleteHistory: return "IncompleteHistory";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::MissingConstants: return "MissingConstants";
        case ErrorCode::NotScalarPressure: return "NotScalarPressure";
        case ErrorCode::MaxInnerExceeded: return "MaxInnerExceeded";
        case ErrorCode::SolverFailure: return "SolverFailure";
        case ErrorCode::UsageError: return "UsageError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace porosplit

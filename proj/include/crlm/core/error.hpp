#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crlm {

enum class ErrorCode {
    InvalidArgument,
    DuplicateId,
    UnknownColumn,
    MissingTag,
    MissingColumn,
    ParseError,
    IoError,
    SingleClass,
    EmptyInput,
    NoPairs,
    NoUsablePairs,
    DegenerateResamples,
    DimensionMismatch,
    NonConvergence,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::MissingTag: return "MissingTag";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NoPairs: return "NoPairs";
        case ErrorCode::NoUsablePairs: return "NoUsablePairs";
        case ErrorCode::DegenerateResamples: return "DegenerateResamples";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonConvergence: return "NonConvergence";
    }
    return "Unknown";
}

// All library failures surface as crlm::Error; code() lets callers (and the
// CLI exit-code mapping) branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    // Message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace crlm

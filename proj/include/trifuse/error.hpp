#pragma once

#include <stdexcept>
#include <string>

namespace trifuse {

/// Failure categories surfaced by the engine. Provider failures inside the
/// search pipeline degrade to diagnostics instead of propagating; everything
/// else throws Error.
enum class ErrorCode {
    EmptyId,
    BadFieldValue,
    DuplicateDocId,
    UnknownDoc,
    DimMismatch,
    ZeroVector,
    ProviderUnavailable,
    MalformedResponse,
    MalformedOutput,
    SchemaViolation,
    MalformedJson,
    UnknownOperator,
    NonNumericComparison,
    UnknownMode,
    IoError,
    ValidationError,
    NotReady,
    UnknownDocInCases,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyId: return "EmptyId";
        case ErrorCode::BadFieldValue: return "BadFieldValue";
        case ErrorCode::DuplicateDocId: return "DuplicateDocId";
        case ErrorCode::UnknownDoc: return "UnknownDoc";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::MalformedOutput: return "MalformedOutput";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::MalformedJson: return "MalformedJson";
        case ErrorCode::UnknownOperator: return "UnknownOperator";
        case ErrorCode::NonNumericComparison: return "NonNumericComparison";
        case ErrorCode::UnknownMode: return "UnknownMode";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::NotReady: return "NotReady";
        case ErrorCode::UnknownDocInCases: return "UnknownDocInCases";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace trifuse

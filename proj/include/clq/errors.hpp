#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clq {

enum class ErrorCode {
    Infeasible,
    DimensionMismatch,
    UnboundedBelow,
    SingularStageMatrix,
    NotConverged,
    OutOfRange,
    VertexEnumerationTooLarge,
    NonBoxConstraint,
    DimensionTooLarge,
    TargetBelowRiskfree,
    InvalidModel,
    Parse,
    Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    // Same code, message prefixed with context such as "stage 3, state 1: ".
    Error annotated(const std::string& context) const {
        return Error(code_, context + what());
    }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnboundedBelow: return "UnboundedBelow";
    case ErrorCode::SingularStageMatrix: return "SingularStageMatrix";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::VertexEnumerationTooLarge: return "VertexEnumerationTooLarge";
    case ErrorCode::NonBoxConstraint: return "NonBoxConstraint";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::TargetBelowRiskfree: return "TargetBelowRiskfree";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace clq

#include "medkit/error.hpp"
#include "medkit/varset.hpp"

namespace medkit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kParseError: return "ParseError";
        case ErrorCode::kCycleDetected: return "CycleDetected";
        case ErrorCode::kUnknownEndpoint: return "UnknownEndpoint";
        case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
        case ErrorCode::kUnknownNode: return "UnknownNode";
        case ErrorCode::kOverlappingSets: return "OverlappingSets";
        case ErrorCode::kUnknownVariable: return "UnknownVariable";
        case ErrorCode::kZeroProbabilityCondition: return "ZeroProbabilityCondition";
        case ErrorCode::kEmptyTreatmentArm: return "EmptyTreatmentArm";
        case ErrorCode::kPositivityViolation: return "PositivityViolation";
        case ErrorCode::kNonBinaryTreatment: return "NonBinaryTreatment";
        case ErrorCode::kDegeneratePropensity: return "DegeneratePropensity";
        case ErrorCode::kZeroSupportStratum: return "ZeroSupportStratum";
        case ErrorCode::kSingularDesign: return "SingularDesign";
        case ErrorCode::kTooManyVariables: return "TooManyVariables";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kParseError:
        case ErrorCode::kCycleDetected:
        case ErrorCode::kUnknownEndpoint:
        case ErrorCode::kDuplicateEdge:
        case ErrorCode::kUnknownNode:
        case ErrorCode::kOverlappingSets:
        case ErrorCode::kUnknownVariable:
        case ErrorCode::kTooManyVariables:
            return true;
        default:
            return false;
    }
}

std::string format_set(const VarSet& set) {
    std::string out = "{";
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (i) out += ",";
        out += set[i];
    }
    out += "}";
    return out;
}

}  // namespace medkit

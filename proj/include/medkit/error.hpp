#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medkit {

enum class ErrorCode {
    kInvalidArgument,
    kParseError,
    kCycleDetected,
    kUnknownEndpoint,
    kDuplicateEdge,
    kUnknownNode,
    kOverlappingSets,
    kUnknownVariable,
    kZeroProbabilityCondition,
    kEmptyTreatmentArm,
    kPositivityViolation,
    kNonBinaryTreatment,
    kDegeneratePropensity,
    kZeroSupportStratum,
    kSingularDesign,
    kTooManyVariables,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by malformed input or usage rather than by the data itself.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace medkit

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cqed {

enum class ErrorCode {
    // input / configuration problems
    NegativeRate,
    NonPositiveFrequency,
    BadInterval,
    OutOfRange,
    InvalidDensity,
    InvalidGrid,
    ParseError,
    ValidationError,
    // numerical failures
    QuadratureFailure,
    StepTooLarge,
    NonFinite,
    NoConvergence,
    NotSplit,
    InsufficientDecay,
    NoOscillation,
    NotSteady,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes caused by bad user input rather than by the numerics.
constexpr bool is_input_error(ErrorCode code) noexcept {
    return code <= ErrorCode::ValidationError;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cqed

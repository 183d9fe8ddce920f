#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfrisk {

enum class ErrorCode {
    invalid_argument,
    degenerate_activation,
    quadrature_failure,
    singular_denominator,
    no_convergence,
    invariant_violation,
    root_selection_ambiguous,
    inconsistent_chi,
    insufficient_trials,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::degenerate_activation: return "DegenerateActivation";
        case ErrorCode::quadrature_failure: return "QuadratureFailure";
        case ErrorCode::singular_denominator: return "SingularDenominator";
        case ErrorCode::no_convergence: return "NoConvergence";
        case ErrorCode::invariant_violation: return "InvariantViolation";
        case ErrorCode::root_selection_ambiguous: return "RootSelectionAmbiguous";
        case ErrorCode::inconsistent_chi: return "InconsistentChi";
        case ErrorCode::insufficient_trials: return "InsufficientTrials";
    }
    return "Unknown";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

inline void require(bool ok, ErrorCode code, const std::string& what) {
    if (!ok) throw Error(code, what);
}

}  // namespace detail

}  // namespace rfrisk

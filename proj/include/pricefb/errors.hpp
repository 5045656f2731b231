#pragma once

#include <stdexcept>
#include <string>

namespace pricefb {

enum class errc {
    invalid_params,
    not_admissible,
    out_of_domain,
    too_close_to_boundary,
    no_sign_change,
    nonpositive_slope,
    boundary_collision,
    index_out_of_range,
    no_convergence,
    singular_jacobian,
    convergence_failure,
    nonpositive_error,
    config_error,
};

const char* errc_name(errc code) noexcept;

/// Single exception type for all domain errors; the code identifies the
/// contract that was violated so callers (and tests) can dispatch on it.
class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw Error(code, message);
}

inline const char* errc_name(errc code) noexcept {
    switch (code) {
        case errc::invalid_params: return "InvalidParams";
        case errc::not_admissible: return "NotAdmissible";
        case errc::out_of_domain: return "OutOfDomain";
        case errc::too_close_to_boundary: return "TooCloseToBoundary";
        case errc::no_sign_change: return "NoSignChange";
        case errc::nonpositive_slope: return "NonpositiveSlope";
        case errc::boundary_collision: return "BoundaryCollision";
        case errc::index_out_of_range: return "IndexOutOfRange";
        case errc::no_convergence: return "NoConvergence";
        case errc::singular_jacobian: return "SingularJacobian";
        case errc::convergence_failure: return "ConvergenceFailure";
        case errc::nonpositive_error: return "NonpositiveError";
        case errc::config_error: return "ConfigError";
    }
    return "Error";
}

}  // namespace pricefb

#pragma once

#include <stdexcept>
#include <string>

namespace rsinv {

/// Machine-checkable failure causes surfaced by the library.
enum class ErrorCode {
    zero_volatility,
    rho_out_of_range,
    gamma_zero,
    degenerate_denominator,
    nonpositive_horizon,
    nonpositive_mean_reversion,
    nonpositive_wealth,
    delta_nonpositive,
    degenerate_ell,
    pole_on_interval,
    blowup_detected,
    nonconvex_h,
    wealth_nonpositive,
    skipped_point,
    config_parse,
    unknown_subcommand,
    output_unwritable,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace rsinv

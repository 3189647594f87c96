#include "rsinv/market.hpp"

#include <cmath>

namespace rsinv {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::zero_volatility: return "ZeroVolatility";
        case ErrorCode::rho_out_of_range: return "RhoOutOfRange";
        case ErrorCode::gamma_zero: return "GammaZero";
        case ErrorCode::degenerate_denominator: return "DegenerateDenominator";
        case ErrorCode::nonpositive_horizon: return "NonpositiveHorizon";
        case ErrorCode::nonpositive_mean_reversion: return "NonpositiveMeanReversion";
        case ErrorCode::nonpositive_wealth: return "NonpositiveWealth";
        case ErrorCode::delta_nonpositive: return "DeltaNonpositive";
        case ErrorCode::degenerate_ell: return "DegenerateEll";
        case ErrorCode::pole_on_interval: return "PoleOnInterval";
        case ErrorCode::blowup_detected: return "BlowupDetected";
        case ErrorCode::nonconvex_h: return "NonconvexH";
        case ErrorCode::wealth_nonpositive: return "WealthNonpositive";
        case ErrorCode::skipped_point: return "SkippedPoint";
        case ErrorCode::config_parse: return "ConfigParse";
        case ErrorCode::unknown_subcommand: return "UnknownSubcommand";
        case ErrorCode::output_unwritable: return "OutputUnwritable";
    }
    return "UnknownError";
}

MarketParams validate(const MarketParams& params) {
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(params.r) || !finite(params.m) || !finite(params.lbar0))
        throw std::invalid_argument("MarketParams: non-finite r, m or lbar0");

    if (!finite(params.sigma) || !finite(params.sigma_bar) || params.sigma == 0.0 ||
        params.sigma_bar == 0.0)
        throw Error(ErrorCode::zero_volatility, "sigma and sigma_bar must be nonzero");
    if (!(params.rho >= -1.0 && params.rho <= 1.0))
        throw Error(ErrorCode::rho_out_of_range, "rho must lie in [-1, 1]");
    if (!finite(params.gamma) || params.gamma == 0.0)
        throw Error(ErrorCode::gamma_zero, "gamma must be nonzero");
    if (!(params.c > 0.0) || !finite(params.c))
        throw Error(ErrorCode::nonpositive_mean_reversion, "c must be positive");
    if (!(params.horizon > 0.0) || !finite(params.horizon))
        throw Error(ErrorCode::nonpositive_horizon, "horizon must be positive");
    if (!(params.x0 > 0.0) || !finite(params.x0))
        throw Error(ErrorCode::nonpositive_wealth, "x0 must be positive");
    if (params.quad_denom() == 0.0)
        throw Error(ErrorCode::degenerate_denominator,
                    "(gamma-1)(sigma^2+sigma_bar^2) - 2 rho sigma sigma_bar must be nonzero");
    return params;
}

double state_from_logprice(const MarketParams& params, double t, double l) {
    return l - params.trend(t) + params.m / params.c;
}

double logprice_from_state(const MarketParams& params, double t, double x) {
    return x + params.trend(t) - params.m / params.c;
}

SolvabilityBound solvability_bound(const MarketParams& params) {
    const double s2 = params.vol2_sum();
    const double p = params.rho * params.sigma * params.sigma_bar;
    const double lhs = (params.gamma - 1.0) / (params.gamma * params.gamma);
    const double rhs = 2.0 * p * s2 / (s2 * s2 + 4.0 * p * (s2 + p));

    SolvabilityBound out;
    out.delta_positive = lhs < rhs;
    if (params.rho > -1.0 && params.rho < 1.0 && params.rho != 0.0)
        out.gamma_upper = 1.0 + 2.0 * p / s2;
    return out;
}

} // namespace rsinv

#pragma once

#include <optional>
#include <string>

#include "rsinv/errors.hpp"

namespace rsinv {

/**
 * Market model constants.
 *
 * The bond grows at rate r. The log stock price L(t) mean-reverts with
 * speed c around the linear trend mt + lbar0, driven by two Brownian
 * motions with volatilities sigma, sigma_bar and correlation rho. The
 * investor holds wealth x0 at t=0, invests over [0, horizon], and has
 * power-utility exponent gamma.
 *
 * Units: rates and speeds are 1/year, volatilities 1/sqrt(year),
 * horizon years, x0 currency; rho and gamma are dimensionless.
 */
struct MarketParams {
    double r = 0.0;
    double c = 1.0;
    double m = 0.0;
    double lbar0 = 0.0;
    double sigma = 0.0;
    double sigma_bar = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    double horizon = 1.0;
    double x0 = 1.0;

    /// sigma^2 + sigma_bar^2
    double vol2_sum() const noexcept { return sigma * sigma + sigma_bar * sigma_bar; }
    /// 2*rho*sigma*sigma_bar
    double vol2_cross() const noexcept { return 2.0 * rho * sigma * sigma_bar; }
    /// quadratic variation rate of the log price: sigma^2 + sigma_bar^2 + 2 rho sigma sigma_bar
    double vol2_total() const noexcept { return vol2_sum() + vol2_cross(); }
    /// D = (gamma-1)(sigma^2+sigma_bar^2) - 2 rho sigma sigma_bar; the quadratic
    /// control coefficient shared by every feedback formula
    double quad_denom() const noexcept { return (gamma - 1.0) * vol2_sum() - vol2_cross(); }
    /// M = vol2_total()/2 + m - r; the control-linear excess-return rate
    double excess_rate() const noexcept { return 0.5 * vol2_total() + m - r; }
    /// control gain in the reduced-state drift: gamma*(sigma^2+sigma_bar^2)
    double drift_gain() const noexcept { return gamma * vol2_sum(); }
    /// deterministic log-price trend mt + lbar0
    double trend(double t) const noexcept { return m * t + lbar0; }
};

/// Checks every model invariant; returns the params unchanged or throws an
/// Error with one distinct code per violated invariant.
MarketParams validate(const MarketParams& params);

/// Reduced state x = l - (m t + lbar0) + m/c for log price l at time t.
double state_from_logprice(const MarketParams& params, double t, double l);

/// Inverse transform: l = x + (m t + lbar0) - m/c.
double logprice_from_state(const MarketParams& params, double t, double x);

/// A (time, reduced state) pair, optionally carrying the raw log price it
/// was derived from.
struct StatePoint {
    double t = 0.0;
    double x = 0.0;
    std::optional<double> logprice{};

    static StatePoint from_logprice(const MarketParams& params, double t, double l) {
        return StatePoint{t, state_from_logprice(params, t, l), l};
    }
};

/// Running cost rate in reduced coordinates:
///   h(x,u) = u^2/2 * D + r(1-u) + u [m - c x + vol2_total()/2].
inline double running_cost(const MarketParams& p, double x, double u) noexcept {
    return 0.5 * u * u * p.quad_denom() + p.r * (1.0 - u)
        + u * (p.m - p.c * x + 0.5 * p.vol2_total());
}

struct SolvabilityBound {
    /// Whether the closed-form solvability inequality holds (Delta > 0).
    bool delta_positive = false;
    /// Risk-seeking upper bound 1 + 2 rho sigma sigma_bar/(sigma^2+sigma_bar^2),
    /// reported for rho in (-1,1) \ {0}.
    std::optional<double> gamma_upper{};
};

/// Evaluates the solvability inequality
///   (gamma-1)/gamma^2 < 2 rho sg sb (sg^2+sb^2) / [(sg^2+sb^2)^2 + 4 rho sg sb (sg^2+sb^2+rho sg sb)]
/// directly, and the gamma upper bound it implies for correlated noise.
SolvabilityBound solvability_bound(const MarketParams& params);

/// Strict JSON codec for MarketParams: flat object, exactly the field names
/// of the struct, unknown keys rejected; lbar0 and x0 may be omitted and
/// default to 0 and 1.
MarketParams params_from_json(const std::string& text);
std::string params_to_json(const MarketParams& params);

} // namespace rsinv

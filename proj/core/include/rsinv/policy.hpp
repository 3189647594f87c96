#pragma once

#include <functional>
#include <memory>

#include "rsinv/riccati.hpp"

namespace rsinv {

/**
 * The optimal investment proportion in state feedback form
 *
 *   u(t, x) = a(t) x + b(t),
 *   a(t) = [-gamma (s^2+sb^2) Q(t) + c] / D,
 *   b(t) = -gamma (s^2+sb^2) phi(t) / D - [vol2_total/2 + m - r] / D.
 */
class FeedbackPolicy {
public:
    explicit FeedbackPolicy(std::shared_ptr<const ValueFunctions> vf) : vf_(std::move(vf)) {}

    double a(double t) const;
    double b(double t) const;
    double operator()(double t, double x) const { return a(t) * x + b(t); }

    const ValueFunctions& value_functions() const noexcept { return *vf_; }

private:
    std::shared_ptr<const ValueFunctions> vf_;
};

/// Any control law used by the simulator; all laws in this project are affine
/// in the state.
struct ControlLaw {
    std::function<double(double)> gain;
    std::function<double(double)> offset;

    double operator()(double t, double x) const { return gain(t) * x + offset(t); }

    static ControlLaw zero();
    static ControlLaw constant(double u);
    static ControlLaw feedback(std::shared_ptr<const ValueFunctions> vf);
};

/// Costate triple along the candidate optimal pair.
struct AdjointTriple {
    double p = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
};

/// u(t, x) per the feedback law.
double feedback(const MarketParams& params, const ValueFunctions& vf, double t, double x);

/// (p, q1, q2) = (-Q(t) x - phi(t), -sigma Q(t), -sigma_bar Q(t)).
AdjointTriple adjoints(const MarketParams& params, const ValueFunctions& vf, double t,
                       double x);

/// The pointwise decision function whose minimizer over u is the optimal
/// control:
///   [-c x + gamma (s^2+sb^2) u] p - (s^2+sb^2) gamma p^2 / 2
///   - u^2/2 [(gamma-1)(s^2+sb^2) - 2 rho s sb]
///   - [vol2_total/2 + m - r - c x] u + sigma q1 + sigma_bar q2 - r.
double h_function(const MarketParams& params, double x, double u, const AdjointTriple& adj);

/// Stationary point of h_function in u expressed through the costate:
///   gamma (s^2+sb^2)/D p + c/D x - [vol2_total/2 + m - r]/D.
double minimizer_from_adjoint(const MarketParams& params, double p, double x);

struct MinimizerReport {
    double max_deviation = 0.0;
    int samples = 0;
    double tolerance = 0.0;
    bool passed = false;
};

/**
 * Grid-search cross-check of the analytic minimizer: at sampled (t, x) the
 * argmin of h_function over u in [grid_lo, grid_hi] (step grid_step) must
 * match the feedback law within tolerance. x is sampled by inverting the
 * affine law from a uniform u-target so the true minimizer stays inside the
 * search window. Requires D < 0 (strict convexity in u); throws NonconvexH
 * otherwise.
 */
MinimizerReport minimizer_check(const MarketParams& params, const ValueFunctions& vf,
                                int samples, std::uint64_t seed, double tolerance = 2e-4,
                                double grid_lo = -10.0, double grid_hi = 10.0,
                                double grid_step = 1e-4);

} // namespace rsinv

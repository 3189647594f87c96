#include "rsinv/policy.hpp"

#include <cmath>

#include "rsinv/rng.hpp"

namespace rsinv {

double FeedbackPolicy::a(double t) const {
    const MarketParams& p = vf_->params();
    return (-p.drift_gain() * vf_->q(t) + p.c) / p.quad_denom();
}

double FeedbackPolicy::b(double t) const {
    const MarketParams& p = vf_->params();
    return (-p.drift_gain() * vf_->phi(t) - p.excess_rate()) / p.quad_denom();
}

ControlLaw ControlLaw::zero() {
    return ControlLaw{[](double) { return 0.0; }, [](double) { return 0.0; }};
}

ControlLaw ControlLaw::constant(double u) {
    return ControlLaw{[](double) { return 0.0; }, [u](double) { return u; }};
}

ControlLaw ControlLaw::feedback(std::shared_ptr<const ValueFunctions> vf) {
    FeedbackPolicy policy(std::move(vf));
    return ControlLaw{[policy](double t) { return policy.a(t); },
                      [policy](double t) { return policy.b(t); }};
}

double feedback(const MarketParams& params, const ValueFunctions& vf, double t, double x) {
    const double d = params.quad_denom();
    return (-params.drift_gain() * vf.q(t) + params.c) / d * x
        - params.drift_gain() * vf.phi(t) / d - params.excess_rate() / d;
}

AdjointTriple adjoints(const MarketParams& params, const ValueFunctions& vf, double t,
                       double x) {
    const double qt = vf.q(t);
    return AdjointTriple{-qt * x - vf.phi(t), -params.sigma * qt, -params.sigma_bar * qt};
}

double h_function(const MarketParams& params, double x, double u, const AdjointTriple& adj) {
    const double s2 = params.vol2_sum();
    return (-params.c * x + params.gamma * s2 * u) * adj.p
        - 0.5 * s2 * params.gamma * adj.p * adj.p
        - 0.5 * u * u * params.quad_denom()
        - (params.excess_rate() - params.c * x) * u
        + params.sigma * adj.q1 + params.sigma_bar * adj.q2 - params.r;
}

double minimizer_from_adjoint(const MarketParams& params, double p, double x) {
    const double d = params.quad_denom();
    return params.drift_gain() / d * p + params.c / d * x - params.excess_rate() / d;
}

MinimizerReport minimizer_check(const MarketParams& params, const ValueFunctions& vf,
                                int samples, std::uint64_t seed, double tolerance,
                                double grid_lo, double grid_hi, double grid_step) {
    if (!(params.quad_denom() < 0.0))
        throw Error(ErrorCode::nonconvex_h,
                    "decision function is not strictly convex in u (D >= 0)");

    MinimizerReport report;
    report.samples = samples;
    report.tolerance = tolerance;

    rng::PathStream stream(seed, 0);
    const auto n_cells = static_cast<long>(std::llround((grid_hi - grid_lo) / grid_step));
    // keep the true minimizer one unit inside the search window
    const double target_lo = grid_lo + 1.0;
    const double target_hi = grid_hi - 1.0;
    const FeedbackPolicy law(std::make_shared<ValueFunctions>(vf));

    for (int i = 0; i < samples; ++i) {
        const double t = stream.uniform(0.0, params.horizon);
        const double u_target = stream.uniform(target_lo, target_hi);
        const double gain = law.a(t);
        const double x = std::abs(gain) > 1e-12 ? (u_target - law.b(t)) / gain
                                                : stream.uniform(params.x0 - 1.0, params.x0 + 1.0);

        const AdjointTriple adj = adjoints(params, vf, t, x);
        double best_u = grid_lo;
        double best_value = h_function(params, x, grid_lo, adj);
        for (long k = 1; k <= n_cells; ++k) {
            const double u = grid_lo + grid_step * static_cast<double>(k);
            const double value = h_function(params, x, u, adj);
            if (value < best_value) {
                best_value = value;
                best_u = u;
            }
        }
        const double deviation = std::abs(best_u - feedback(params, vf, t, x));
        if (deviation > report.max_deviation) report.max_deviation = deviation;
    }
    report.passed = report.max_deviation <= tolerance;
    return report;
}

} // namespace rsinv

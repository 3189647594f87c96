#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsinv/market.hpp"
#include "rsinv/policy.hpp"
#include "rsinv/rng.hpp"

namespace rsinv {

/// Probability measure a simulation runs under: P is the drift-adjusted
/// measure of the reduced state equation, P_TILDE the market measure of the
/// raw (log price, wealth) dynamics.
enum class Measure { P, P_TILDE };

struct SimConfig {
    std::int64_t n_paths = 100000;
    int n_steps = 1000;
    std::uint64_t seed = 20240601;
    Measure measure = Measure::P;
    bool with_weights = false;   ///< accumulate pathwise change-of-measure weights (P_TILDE)
    bool store_paths = false;    ///< keep full per-path trajectories and controls
    int n_threads = 0;           ///< 0 = hardware concurrency
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
};

/**
 * Simulation output. Scalar per-path summaries are always filled; full
 * trajectories only under store_paths. Entries are indexed by path and do
 * not depend on the thread count.
 */
struct PathEnsemble {
    Measure measure = Measure::P;
    std::uint64_t seed = 0;
    std::vector<double> times;

    std::vector<double> state_terminal;   ///< x(T) under P, L(T) under P_TILDE
    std::vector<double> cost_integral;    ///< Int_0^T h dt (under P)
    std::vector<double> wealth_terminal;  ///< X(T) (under P_TILDE)
    std::vector<double> rn_weights;       ///< pathwise dP/dP_TILde weights (with_weights)
    std::vector<double> control_sup;      ///< per-path sup_t (gamma sigma u)^2 + (gamma sigma_bar u)^2

    std::vector<std::vector<double>> states;    ///< optional trajectories (x or L)
    std::vector<std::vector<double>> wealth;    ///< optional X trajectories (P_TILDE)
    std::vector<std::vector<double>> controls;  ///< optional applied u

    std::int64_t excluded = 0;  ///< paths with non-finite wealth bookkeeping
};

struct Increments {
    double dw1 = 0.0;
    double dw2 = 0.0;
};

/// One step of a correlated Brownian pair: dW1 = sqrt(dt) Z1,
/// dW2 = sqrt(dt) (rho Z1 + sqrt(1-rho^2) Z2).
inline Increments correlated_increments(double rho, double dt, rng::PathStream& stream) {
    const rng::NormalPair z = stream.next();
    const double root_dt = std::sqrt(dt);
    return Increments{root_dt * z.z1,
                      root_dt * (rho * z.z1 + std::sqrt(1.0 - rho * rho) * z.z2)};
}

/// Euler scheme for the reduced state equation under P,
///   dx = [-c x + gamma (s^2+sb^2) u] dt + sigma dW1 + sigma_bar dW2,
/// from x(0) = m/c, accumulating the running cost integral per path by the
/// left-endpoint rule.
PathEnsemble simulate_reduced(const MarketParams& params, const ControlLaw& law,
                              const SimConfig& cfg);

/// Joint Euler scheme for (log price, wealth) under P_TILDE. The control is
/// evaluated at the transformed state x = L - trend(t) + m/c; wealth is
/// integrated in log space so it stays positive, with the quadratic Ito
/// correction u^2 vol2_total/2 included explicitly.
PathEnsemble simulate_original(const MarketParams& params, const ControlLaw& law,
                               const SimConfig& cfg);

/// Sample mean / standard error of exp(gamma Int h dt) over a P-ensemble.
Estimate estimate_J(const MarketParams& params, const PathEnsemble& ensemble);
Estimate estimate_J(const MarketParams& params, const ControlLaw& law, SimConfig cfg);

/// Sample mean / standard error of (1/gamma) X(T)^gamma over a P_TILDE
/// ensemble; non-finite paths are excluded and counted.
Estimate estimate_hara(const MarketParams& params, const PathEnsemble& ensemble);
Estimate estimate_hara(const MarketParams& params, const ControlLaw& law, SimConfig cfg);

/// Pathwise discretized change-of-measure weight
///   exp{ gamma sum u (sigma dW1 + sigma_bar dW2)
///        - gamma^2/2 (sigma^2+sigma_bar^2) sum u^2 dt }.
double girsanov_weight(const MarketParams& params, std::span<const double> u,
                       std::span<const double> dw1, std::span<const double> dw2, double dt);

/// Mean and standard error of a sample, skipping non-finite entries.
Estimate mean_and_error(const std::vector<double>& values);

} // namespace rsinv

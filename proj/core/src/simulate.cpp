#include "rsinv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace rsinv {

namespace {

struct LawTable {
    std::vector<double> gain;
    std::vector<double> offset;
};

LawTable tabulate(const ControlLaw& law, const std::vector<double>& times, int n_steps) {
    LawTable table;
    table.gain.resize(static_cast<std::size_t>(n_steps));
    table.offset.resize(static_cast<std::size_t>(n_steps));
    for (int k = 0; k < n_steps; ++k) {
        table.gain[static_cast<std::size_t>(k)] = law.gain(times[static_cast<std::size_t>(k)]);
        table.offset[static_cast<std::size_t>(k)] =
            law.offset(times[static_cast<std::size_t>(k)]);
    }
    return table;
}

template <class Body>
void for_each_path(std::int64_t n_paths, int n_threads, Body body) {
    int threads = n_threads > 0
                      ? n_threads
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::int64_t>(threads, n_paths));
    if (threads <= 1) {
        body(0, n_paths);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const std::int64_t chunk = (n_paths + threads - 1) / threads;
    for (int i = 0; i < threads; ++i) {
        const std::int64_t lo = i * chunk;
        const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n_paths);
        if (lo >= hi) break;
        pool.emplace_back([=] { body(lo, hi); });
    }
    for (auto& worker : pool) worker.join();
}

void check_config(const SimConfig& cfg) {
    if (cfg.n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
    if (cfg.n_steps < 1) throw std::invalid_argument("SimConfig: n_steps must be >= 1");
}

} // namespace

PathEnsemble simulate_reduced(const MarketParams& params, const ControlLaw& law,
                              const SimConfig& cfg) {
    check_config(cfg);
    const int n_steps = cfg.n_steps;
    const double dt = params.horizon / n_steps;
    const auto n_paths = static_cast<std::size_t>(cfg.n_paths);

    PathEnsemble out;
    out.measure = Measure::P;
    out.seed = cfg.seed;
    out.times = uniform_grid(params.horizon, n_steps);
    out.state_terminal.resize(n_paths);
    out.cost_integral.resize(n_paths);
    out.control_sup.resize(n_paths);
    if (cfg.store_paths) {
        out.states.assign(n_paths, {});
        out.controls.assign(n_paths, {});
    }

    const LawTable table = tabulate(law, out.times, n_steps);
    const double x_init = params.m / params.c;
    const double drift_gain = params.drift_gain();
    const double sup_scale = params.gamma * params.gamma * params.vol2_sum();

    for_each_path(cfg.n_paths, cfg.n_threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t path = lo; path < hi; ++path) {
            rng::PathStream stream(cfg.seed, static_cast<std::uint64_t>(path));
            double x = x_init;
            double cost = 0.0;
            double sup = 0.0;
            std::vector<double>* traj = nullptr;
            std::vector<double>* ctrl = nullptr;
            if (cfg.store_paths) {
                traj = &out.states[static_cast<std::size_t>(path)];
                ctrl = &out.controls[static_cast<std::size_t>(path)];
                traj->reserve(static_cast<std::size_t>(n_steps) + 1);
                ctrl->reserve(static_cast<std::size_t>(n_steps));
                traj->push_back(x);
            }
            for (int k = 0; k < n_steps; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                const double u = table.gain[kk] * x + table.offset[kk];
                cost += running_cost(params, x, u) * dt;
                sup = std::max(sup, sup_scale * u * u);
                const Increments dw = correlated_increments(params.rho, dt, stream);
                x += (-params.c * x + drift_gain * u) * dt + params.sigma * dw.dw1 +
                     params.sigma_bar * dw.dw2;
                if (ctrl) ctrl->push_back(u);
                if (traj) traj->push_back(x);
            }
            out.state_terminal[static_cast<std::size_t>(path)] = x;
            out.cost_integral[static_cast<std::size_t>(path)] = cost;
            out.control_sup[static_cast<std::size_t>(path)] = sup;
        }
    });
    return out;
}

PathEnsemble simulate_original(const MarketParams& params, const ControlLaw& law,
                               const SimConfig& cfg) {
    check_config(cfg);
    const int n_steps = cfg.n_steps;
    const double dt = params.horizon / n_steps;
    const auto n_paths = static_cast<std::size_t>(cfg.n_paths);

    PathEnsemble out;
    out.measure = Measure::P_TILDE;
    out.seed = cfg.seed;
    out.times = uniform_grid(params.horizon, n_steps);
    out.state_terminal.resize(n_paths);
    out.wealth_terminal.resize(n_paths);
    out.control_sup.resize(n_paths);
    if (cfg.with_weights) out.rn_weights.resize(n_paths);
    if (cfg.store_paths) {
        out.states.assign(n_paths, {});
        out.wealth.assign(n_paths, {});
        out.controls.assign(n_paths, {});
    }

    const LawTable table = tabulate(law, out.times, n_steps);
    const double x_shift = params.m / params.c;
    const double total_var = params.vol2_total();
    const double sup_scale = params.gamma * params.gamma * params.vol2_sum();
    const double weight_decay = 0.5 * params.gamma * params.gamma * params.vol2_sum();
    std::vector<std::int64_t> excluded_per_path(n_paths, 0);

    for_each_path(cfg.n_paths, cfg.n_threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t path = lo; path < hi; ++path) {
            const auto idx = static_cast<std::size_t>(path);
            rng::PathStream stream(cfg.seed, static_cast<std::uint64_t>(path));
            double logprice = params.lbar0;
            double log_wealth = std::log(params.x0);
            double weight_mart = 0.0;
            double weight_comp = 0.0;
            double sup = 0.0;
            std::vector<double>* traj = nullptr;
            if (cfg.store_paths) {
                traj = &out.states[idx];
                traj->reserve(static_cast<std::size_t>(n_steps) + 1);
                traj->push_back(logprice);
                out.wealth[idx].reserve(static_cast<std::size_t>(n_steps) + 1);
                out.wealth[idx].push_back(params.x0);
                out.controls[idx].reserve(static_cast<std::size_t>(n_steps));
            }
            for (int k = 0; k < n_steps; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                const double t = out.times[kk];
                const double x_red = logprice - params.trend(t) + x_shift;
                const double u = table.gain[kk] * x_red + table.offset[kk];
                sup = std::max(sup, sup_scale * u * u);
                const Increments dw = correlated_increments(params.rho, dt, stream);
                const double d_logprice = params.c * (params.trend(t) - logprice) * dt +
                                          params.sigma * dw.dw1 + params.sigma_bar * dw.dw2;
                log_wealth += (1.0 - u) * params.r * dt + u * d_logprice +
                              0.5 * (u - u * u) * total_var * dt;
                if (cfg.with_weights) {
                    weight_mart +=
                        params.gamma * u * (params.sigma * dw.dw1 + params.sigma_bar * dw.dw2);
                    weight_comp += weight_decay * u * u * dt;
                }
                logprice += d_logprice;
                if (traj) {
                    out.controls[idx].push_back(u);
                    traj->push_back(logprice);
                    out.wealth[idx].push_back(std::exp(log_wealth));
                }
            }
            out.state_terminal[idx] = logprice;
            if (std::isfinite(log_wealth)) {
                out.wealth_terminal[idx] = std::exp(log_wealth);
            } else {
                // wealth bookkeeping broke down; mark the path so estimators skip it
                out.wealth_terminal[idx] = std::numeric_limits<double>::quiet_NaN();
                excluded_per_path[idx] = 1;
            }
            if (cfg.with_weights) out.rn_weights[idx] = std::exp(weight_mart - weight_comp);
            out.control_sup[idx] = sup;
        }
    });
    for (const std::int64_t flag : excluded_per_path) out.excluded += flag;
    return out;
}

Estimate mean_and_error(const std::vector<double>& values) {
    long double sum = 0.0L;
    std::int64_t n = 0;
    for (const double v : values) {
        if (!std::isfinite(v)) continue;
        sum += v;
        ++n;
    }
    Estimate est;
    est.n = n;
    if (n == 0) return est;
    const double mean = static_cast<double>(sum / n);
    est.mean = mean;
    if (n == 1) return est;
    long double ss = 0.0L;
    for (const double v : values) {
        if (!std::isfinite(v)) continue;
        const long double d = static_cast<long double>(v) - mean;
        ss += d * d;
    }
    est.std_error = static_cast<double>(std::sqrt(ss / (n - 1) / n));
    return est;
}

Estimate estimate_J(const MarketParams& params, const PathEnsemble& ensemble) {
    if (ensemble.measure != Measure::P)
        throw std::invalid_argument("estimate_J needs a P-measure ensemble");
    std::vector<double> values(ensemble.cost_integral.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = std::exp(params.gamma * ensemble.cost_integral[i]);
    return mean_and_error(values);
}

Estimate estimate_J(const MarketParams& params, const ControlLaw& law, SimConfig cfg) {
    cfg.measure = Measure::P;
    return estimate_J(params, simulate_reduced(params, law, cfg));
}

Estimate estimate_hara(const MarketParams& params, const PathEnsemble& ensemble) {
    if (ensemble.measure != Measure::P_TILDE)
        throw std::invalid_argument("estimate_hara needs a P_TILDE-measure ensemble");
    std::vector<double> values(ensemble.wealth_terminal.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = std::pow(ensemble.wealth_terminal[i], params.gamma) / params.gamma;
    return mean_and_error(values);
}

Estimate estimate_hara(const MarketParams& params, const ControlLaw& law, SimConfig cfg) {
    cfg.measure = Measure::P_TILDE;
    return estimate_hara(params, simulate_original(params, law, cfg));
}

double girsanov_weight(const MarketParams& params, std::span<const double> u,
                       std::span<const double> dw1, std::span<const double> dw2, double dt) {
    if (u.size() != dw1.size() || u.size() != dw2.size())
        throw std::invalid_argument("girsanov_weight: mismatched spans");
    double mart = 0.0;
    double comp = 0.0;
    const double decay = 0.5 * params.gamma * params.gamma * params.vol2_sum();
    for (std::size_t k = 0; k < u.size(); ++k) {
        mart += params.gamma * u[k] * (params.sigma * dw1[k] + params.sigma_bar * dw2[k]);
        comp += decay * u[k] * u[k] * dt;
    }
    return std::exp(mart - comp);
}

} // namespace rsinv

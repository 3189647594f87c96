#include <benchmark/benchmark.h>

#include <memory>

#include "rsinv/policy.hpp"
#include "rsinv/riccati.hpp"
#include "rsinv/rng.hpp"
#include "rsinv/simulate.hpp"

namespace {

rsinv::MarketParams bench_market() {
    rsinv::MarketParams p;
    p.r = 0.05;
    p.c = 1.0;
    p.m = 0.55;
    p.sigma = 0.5;
    p.sigma_bar = 0.3;
    p.rho = 0.2;
    p.gamma = 0.5;
    p.horizon = 1.0;
    p.x0 = 1.0;
    return p;
}

void normal_pairs(benchmark::State& state) {
    std::uint64_t step = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rsinv::rng::normal_pair(42, 7, step++));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(normal_pairs);

void solve_value_functions(benchmark::State& state) {
    const auto p = bench_market();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rsinv::ValueFunctions::solve(p, state.range(0)));
    }
}
BENCHMARK(solve_value_functions)->Arg(250)->Arg(1000);

void phi_quadrature(benchmark::State& state) {
    const auto p = bench_market();
    const auto cf = rsinv::coefficients(p);
    const auto q = [&](double t) { return rsinv::q_closed_form(cf, p, t); };
    for (auto _ : state) {
        benchmark::DoNotOptimize(rsinv::phi_closed_form(p, cf, q, 0.0, 2001));
    }
}
BENCHMARK(phi_quadrature);

void reduced_paths(benchmark::State& state) {
    const auto p = bench_market();
    const auto law = rsinv::ControlLaw::feedback(
        std::make_shared<rsinv::ValueFunctions>(rsinv::ValueFunctions::solve(p, 1000)));
    rsinv::SimConfig cfg;
    cfg.n_paths = state.range(0);
    cfg.n_steps = 1000;
    cfg.n_threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rsinv::simulate_reduced(p, law, cfg));
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_paths * cfg.n_steps);
}
BENCHMARK(reduced_paths)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void wealth_paths(benchmark::State& state) {
    const auto p = bench_market();
    const auto law = rsinv::ControlLaw::constant(0.5);
    rsinv::SimConfig cfg;
    cfg.n_paths = state.range(0);
    cfg.n_steps = 1000;
    cfg.n_threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rsinv::simulate_original(p, law, cfg));
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_paths * cfg.n_steps);
}
BENCHMARK(wealth_paths)->Arg(1000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

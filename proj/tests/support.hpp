#pragma once

#include "rsinv/market.hpp"

namespace testutil {

/// The default market used across the tests: yearly rates r=0.05, c=1,
/// trend slope m=0.55, sigma=0.5, sigma_bar=0.3, unit horizon and wealth.
inline rsinv::MarketParams market(double gamma = 0.5, double rho = 0.2) {
    rsinv::MarketParams p;
    p.r = 0.05;
    p.c = 1.0;
    p.m = 0.55;
    p.lbar0 = 0.0;
    p.sigma = 0.5;
    p.sigma_bar = 0.3;
    p.rho = rho;
    p.gamma = gamma;
    p.horizon = 1.0;
    p.x0 = 1.0;
    return p;
}

} // namespace testutil

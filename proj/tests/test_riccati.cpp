#include <doctest.h>

#include <cmath>

#include "rsinv/riccati.hpp"
#include "rsinv/rng.hpp"
#include "support.hpp"

using rsinv::Error;
using rsinv::ErrorCode;
using rsinv::MarketParams;
using rsinv::RiccatiCoeffs;

namespace {

// linear-case market: sigma = sigma_bar = 1, rho = -1/2, gamma = -1/2 makes
// the quadratic coefficient vanish identically (all quantities dyadic)
MarketParams linear_market() {
    auto p = testutil::market(-0.5, -0.5);
    p.sigma = 1.0;
    p.sigma_bar = 1.0;
    return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace

TEST_CASE("coefficients at zero correlation: simplified forms") {
    const auto p = testutil::market(0.5, 0.0);
    const auto cf = rsinv::coefficients(p);
    // K0 = gamma (s^2+sb^2)/(gamma-1), K1 = c/(gamma-1), H = -c^2/[(gamma-1)(s^2+sb^2)]
    CHECK(cf.k0 == doctest::Approx(-0.34).epsilon(1e-13));
    CHECK(cf.k1 == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK(cf.h_coef == doctest::Approx(100.0 / 17.0).epsilon(1e-13));
    CHECK(cf.delta == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(cf.delta == 4.0 * (cf.k1 * cf.k1 + cf.h_coef * cf.k0));
    REQUIRE(cf.ell.has_value());
    // alpha1 + ell alpha2 vanishes by construction of the exponential form
    CHECK(*cf.alpha1 - *cf.ell * *cf.alpha2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("coefficient structure under random admissible draws") {
    rsinv::rng::PathStream stream(17, 0);
    int seen = 0;
    while (seen < 200) {
        auto p = testutil::market(stream.uniform(0.05, 0.95), stream.uniform(-0.6, 0.9));
        p.sigma = stream.uniform(0.1, 1.2);
        p.sigma_bar = stream.uniform(0.1, 1.2);
        p.c = stream.uniform(0.2, 3.0);
        if (p.quad_denom() == 0.0) continue;
        const auto cf = rsinv::coefficients(p);
        CHECK(cf.delta == 4.0 * (cf.k1 * cf.k1 + cf.h_coef * cf.k0));
        if (cf.delta > 0.0 && cf.k0 != 0.0 && cf.alpha1.has_value()) {
            // alpha1 - alpha2 = sqrt(delta)/k0
            CHECK((*cf.alpha1 > *cf.alpha2) == (cf.k0 * std::sqrt(cf.delta) > 0.0));
        }
        ++seen;
    }
}

TEST_CASE("zero-correlation reduction: delta > 0 iff gamma < 1") {
    rsinv::rng::PathStream stream(19, 0);
    for (int i = 0; i < 200; ++i) {
        auto p = testutil::market(stream.uniform(-2.0, 2.0), 0.0);
        if (p.gamma == 0.0 || p.gamma == 1.0) continue;
        p.sigma = stream.uniform(0.1, 1.5);
        p.sigma_bar = stream.uniform(0.1, 1.5);
        p.c = stream.uniform(0.2, 3.0);
        const auto cf = rsinv::coefficients(p);
        CHECK((cf.delta > 0.0) == (p.gamma < 1.0));
    }
}

TEST_CASE("closed-form Q is exactly zero at the horizon") {
    for (const double rho : {0.0, 0.2, 0.5, -0.3}) {
        const auto p = testutil::market(0.5, rho);
        const auto cf = rsinv::coefficients(p);
        CHECK(rsinv::q_closed_form(cf, p, p.horizon) == 0.0);
    }
}

TEST_CASE("closed-form Q matches RK4 integration") {
    for (const double rho : {0.0, 0.2, 0.5, -0.3}) {
        for (const double gamma : {0.3, 0.5, 0.7}) {
            const auto p = testutil::market(gamma, rho);
            const auto cf = rsinv::coefficients(p);
            const auto tab = rsinv::q_numeric(p, 1000);
            CHECK(tab.v.back() == 0.0);
            double worst = 0.0;
            for (std::size_t i = 0; i < tab.t.size(); ++i)
                worst = std::max(worst,
                                 std::abs(tab.v[i] - rsinv::q_closed_form(cf, p, tab.t[i])));
            CAPTURE(rho);
            CAPTURE(gamma);
            CHECK(worst < 1e-8);
        }
    }
}

TEST_CASE("closed-form Q matches a fine-step RK4 oracle") {
    const auto p = testutil::market(0.5, 0.2);
    const auto cf = rsinv::coefficients(p);
    const auto tab = rsinv::q_numeric(p, 10000);  // step 1e-4
    double worst = 0.0;
    for (std::size_t i = 0; i < tab.t.size(); i += 10)
        worst = std::max(worst, std::abs(tab.v[i] - rsinv::q_closed_form(cf, p, tab.t[i])));
    CHECK(worst < 1e-10);
}

TEST_CASE("vanishing mean reversion collapses Q") {
    auto p = testutil::market(0.5, 0.2);
    p.c = 1e-8;
    const auto cf = rsinv::coefficients(p);
    const auto tab = rsinv::q_numeric(p, 1000);
    for (std::size_t i = 0; i < tab.t.size(); i += 50) {
        CHECK(std::abs(rsinv::q_closed_form(cf, p, tab.t[i])) < 1e-6);
        CHECK(std::abs(tab.v[i] - rsinv::q_closed_form(cf, p, tab.t[i])) < 1e-10);
    }
}

TEST_CASE("linear case k0 = 0: analytic solution and RK4 agree") {
    const auto p = linear_market();
    const auto cf = rsinv::coefficients(p);
    REQUIRE(cf.k0 == 0.0);
    REQUIRE(cf.delta > 0.0);
    CHECK(cf.k1 == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(cf.h_coef == doctest::Approx(0.5).epsilon(1e-14));

    const auto tab = rsinv::q_numeric(p, 2000);
    for (std::size_t i = 0; i < tab.t.size(); i += 100) {
        const double tau = p.horizon - tab.t[i];
        const double analytic =
            cf.h_coef / (2.0 * cf.k1) * (std::exp(2.0 * cf.k1 * tau) - 1.0);
        CHECK(tab.v[i] == doctest::Approx(analytic).epsilon(1e-9));
        CHECK(rsinv::q_closed_form(cf, p, tab.t[i]) ==
              doctest::Approx(analytic).epsilon(1e-13));
    }
}

TEST_CASE("failed solvability condition blocks the closed form and RK4 escapes") {
    const auto p = testutil::market(1.5, 0.0);
    const auto cf = rsinv::coefficients(p);
    CHECK(cf.delta < 0.0);
    REQUIRE(cf.exp_form_block.has_value());
    CHECK(*cf.exp_form_block == ErrorCode::delta_nonpositive);
    CHECK_THROWS_AS((void)rsinv::q_closed_form(cf, p, 0.0), Error);
    CHECK_THROWS_AS((void)rsinv::q_numeric(p, 4000), Error);
    try {
        (void)rsinv::q_numeric(p, 4000);
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::blowup_detected);
    }
}

TEST_CASE("risk-averse corner with a pole inside the horizon") {
    auto p = testutil::market(2.5, 0.9);
    REQUIRE(p.quad_denom() > 0.0);
    const auto cf = rsinv::coefficients(p);
    REQUIRE(cf.delta > 0.0);
    try {
        (void)rsinv::q_closed_form(cf, p, 0.0);
        FAIL("expected a pole");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::pole_on_interval);
    }
    // on a short horizon the pole moves outside [0, T]
    p.horizon = 0.3;
    const auto cf_short = rsinv::coefficients(p);
    const auto tab = rsinv::q_numeric(p, 1000);
    CHECK(max_abs_diff(tab.v, [&] {
              std::vector<double> v(tab.t.size());
              for (std::size_t i = 0; i < v.size(); ++i)
                  v[i] = rsinv::q_closed_form(cf_short, p, tab.t[i]);
              return v;
          }()) < 1e-8);
}

TEST_CASE("no pole whenever the solvability condition holds in the convex regime") {
    rsinv::rng::PathStream stream(23, 0);
    int seen = 0;
    while (seen < 50) {
        auto p = testutil::market(stream.uniform(0.05, 0.95), stream.uniform(-0.6, 0.9));
        p.sigma = stream.uniform(0.15, 1.2);
        p.sigma_bar = stream.uniform(0.15, 1.2);
        p.c = stream.uniform(0.2, 3.0);
        p.horizon = stream.uniform(0.25, 2.0);
        if (!(p.quad_denom() < 0.0)) continue;
        const auto cf = rsinv::coefficients(p);
        if (!(cf.delta > 0.0)) continue;
        if (std::sqrt(cf.delta) * p.horizon > 20.0) continue;  // keep RK4 well resolved
        const auto tab = rsinv::q_numeric(p, 5000);
        double worst = 0.0;
        for (std::size_t i = 0; i < tab.t.size(); ++i) {
            const double q = rsinv::q_closed_form(cf, p, tab.t[i]);
            CHECK(std::isfinite(q));
            worst = std::max(worst, std::abs(q - tab.v[i]));
        }
        CHECK(worst < 1e-6 * (1.0 + std::abs(cf.h_coef)));
        ++seen;
    }
}

TEST_CASE("riccati residual of the closed form vanishes on the grid") {
    for (const double rho : {0.0, 0.2}) {
        const auto p = testutil::market(0.5, rho);
        const auto vf = rsinv::ValueFunctions::solve(p, 1000);
        const auto& cf = vf.coeffs();
        const auto& grid = vf.grid();
        const auto& q = vf.q_tab();
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const double qdot = (q[i + 1] - q[i - 1]) / (grid[i + 1] - grid[i - 1]);
            worst = std::max(worst, std::abs(qdot - cf.k0 * q[i] * q[i] +
                                             2.0 * cf.k1 * q[i] + cf.h_coef));
        }
        CHECK(worst < 1e-5 * (1.0 + std::abs(cf.h_coef)));
    }
}

TEST_CASE("riccati residual drops below 1e-6 once the difference probe resolves") {
    const auto p = testutil::market(0.5, 0.0);
    const auto cf = rsinv::coefficients(p);
    const auto grid = rsinv::uniform_grid(p.horizon, 5000);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double qm = rsinv::q_closed_form(cf, p, grid[i - 1]);
        const double q0 = rsinv::q_closed_form(cf, p, grid[i]);
        const double qp = rsinv::q_closed_form(cf, p, grid[i + 1]);
        const double qdot = (qp - qm) / (grid[i + 1] - grid[i - 1]);
        worst = std::max(worst,
                         std::abs(qdot - cf.k0 * q0 * q0 + 2.0 * cf.k1 * q0 + cf.h_coef));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("f1 and f2 at Q = 0") {
    const auto p = testutil::market(0.5, 0.2);
    const auto cf = rsinv::coefficients(p);
    const auto [f1, f2] = rsinv::f1_f2(cf, p, 0.0);
    CHECK(f1 == cf.k1);
    CHECK(f2 == doctest::Approx(p.c * p.excess_rate() / p.quad_denom()).epsilon(1e-14));

    // direct substitution at Q(0)
    const double q0 = rsinv::q_closed_form(cf, p, 0.0);
    const auto [g1, g2] = rsinv::f1_f2(cf, p, q0);
    const double s2 = p.sigma * p.sigma + p.sigma_bar * p.sigma_bar;
    const double d = (p.gamma - 1.0) * s2 - 2.0 * p.rho * p.sigma * p.sigma_bar;
    const double m_rate = 0.5 * (s2 + 2.0 * p.rho * p.sigma * p.sigma_bar) + p.m - p.r;
    CHECK(g1 == doctest::Approx(-cf.k0 * q0 + cf.k1).epsilon(1e-14));
    CHECK(g2 == doctest::Approx(m_rate / d * (-p.gamma * s2 * q0 + p.c)).epsilon(1e-13));
}

TEST_CASE("phi quadrature: terminal value, vanishing forcing, linearity") {
    const auto p = testutil::market(0.5, 0.2);
    const auto cf = rsinv::coefficients(p);
    const auto q_eval = [&](double t) { return rsinv::q_closed_form(cf, p, t); };
    CHECK(rsinv::phi_closed_form(p, cf, q_eval, p.horizon) == 0.0);

    // forcing term vanishes when m - r = -vol2_total/2 (exact dyadics here)
    auto quiet = testutil::market(0.5, 0.0);
    quiet.sigma = 0.5;
    quiet.sigma_bar = 0.5;
    quiet.m = 0.0;
    quiet.r = 0.25;
    CHECK(quiet.excess_rate() == 0.0);
    const auto quiet_cf = rsinv::coefficients(quiet);
    const auto quiet_q = [&](double t) { return rsinv::q_closed_form(quiet_cf, quiet, t); };
    CHECK(rsinv::phi_closed_form(quiet, quiet_cf, quiet_q, 0.0) == 0.0);

    // the integral is linear in the forcing term
    const auto f1 = [&](double s) { return -cf.k0 * q_eval(s) + cf.k1; };
    const double scale = p.excess_rate() / p.quad_denom();
    const auto f2 = [&](double s) { return scale * (-p.drift_gain() * q_eval(s) + p.c); };
    const double base = rsinv::detail::phi_from_rates(f1, f2, 0.2, p.horizon, 801);
    for (const double lambda : {-1.0, 2.0, 10.0}) {
        const auto f2_scaled = [&](double s) { return lambda * f2(s); };
        CHECK(rsinv::detail::phi_from_rates(f1, f2_scaled, 0.2, p.horizon, 801) ==
              doctest::Approx(lambda * base).epsilon(1e-13));
    }
}

TEST_CASE("phi quadrature reproduces the constant-coefficient solution") {
    const double k = 0.7;
    const auto f1 = [k](double) { return k; };
    const auto f2 = [](double) { return 1.0; };
    for (const double t : {0.0, 0.3, 0.9}) {
        const double expected = (std::exp(k * (1.0 - t)) - 1.0) / k;
        CHECK(rsinv::detail::phi_from_rates(f1, f2, t, 1.0, 2001) ==
              doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("phi quadrature matches RK4 integration") {
    for (const double rho : {0.0, 0.2}) {
        const auto p = testutil::market(0.5, rho);
        const auto cf = rsinv::coefficients(p);
        const auto q_eval = [&](double t) { return rsinv::q_closed_form(cf, p, t); };
        const auto tab = rsinv::phi_numeric(p, cf, q_eval, 1000);
        CHECK(tab.v.back() == 0.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < tab.t.size(); i += 5)
            worst = std::max(worst, std::abs(tab.v[i] - rsinv::phi_closed_form(
                                                            p, cf, q_eval, tab.t[i])));
        CAPTURE(rho);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("phi RK4 reproduces the constant-coefficient solution") {
    const double k = -1.3;
    const auto tab = rsinv::detail::phi_rk4([k](double) { return k; },
                                            [](double) { return 1.0; }, 1.0, 1000);
    CHECK(tab.v.back() == 0.0);
    for (std::size_t i = 0; i < tab.t.size(); i += 100) {
        const double expected = (std::exp(k * (1.0 - tab.t[i])) - 1.0) / k;
        CHECK(tab.v[i] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("value functions: terminal values, node agreement, fallback branch") {
    const auto p = testutil::market(0.5, 0.2);
    const auto vf = rsinv::ValueFunctions::solve(p, 500);
    CHECK(vf.closed_form());
    CHECK(vf.q(p.horizon) == 0.0);
    CHECK(vf.phi(p.horizon) == 0.0);
    CHECK(vf.q_tab().back() == 0.0);
    CHECK(vf.phi_tab().back() == 0.0);
    for (std::size_t i = 0; i < vf.grid().size(); i += 25) {
        CHECK(std::abs(vf.q(vf.grid()[i]) - vf.q_tab()[i]) < 1e-12);
        CHECK(std::abs(vf.phi(vf.grid()[i]) - vf.phi_tab()[i]) < 1e-12);
    }

    // linear branch still reports a closed form
    CHECK(rsinv::ValueFunctions::solve(linear_market(), 200).closed_form());
}

TEST_CASE("value functions fall back to RK4 tabulations when delta <= 0") {
    // failed solvability condition, but the horizon ends before the escape
    auto p = testutil::market(1.5, 0.0);
    p.horizon = 0.3;
    REQUIRE(rsinv::coefficients(p).delta < 0.0);
    const auto vf = rsinv::ValueFunctions::solve(p, 600);
    CHECK_FALSE(vf.closed_form());
    CHECK(vf.q(p.horizon) == 0.0);
    CHECK(vf.phi(p.horizon) == 0.0);
    for (std::size_t i = 0; i < vf.grid().size(); i += 60) {
        CHECK(std::abs(vf.q(vf.grid()[i]) - vf.q_tab()[i]) < 1e-12);
        CHECK(std::abs(vf.phi(vf.grid()[i]) - vf.phi_tab()[i]) < 1e-12);
        CHECK(std::isfinite(vf.q_tab()[i]));
        CHECK(std::isfinite(vf.phi_tab()[i]));
    }
    // the tabulation agrees with a step-halved integration
    const auto fine = rsinv::q_numeric(p, 2400);
    for (std::size_t i = 0; i < vf.grid().size(); i += 30)
        CHECK(vf.q_tab()[i] == doctest::Approx(fine.v[4 * i]).epsilon(1e-9));
}

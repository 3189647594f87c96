#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rsinv/market.hpp"

namespace rsinv {

/**
 * Scalar coefficients of the rewritten terminal-value Riccati equation
 *
 *   Qdot - K0 Q^2 + 2 K1 Q + H = 0,  Q(T) = 0,
 *
 * together with the constants of its exponential closed form. ell, alpha1,
 * alpha2 are present only when delta > 0, k0 != 0 and k1 - sqrt(delta)/2 != 0;
 * exp_form_block records which condition failed. k0 == 0 is not a blocker:
 * the equation is then linear and has its own closed form.
 */
struct RiccatiCoeffs {
    double k0 = 0.0;
    double k1 = 0.0;
    double h_coef = 0.0;
    double delta = 0.0;

    std::optional<double> ell{};
    std::optional<double> alpha1{};
    std::optional<double> alpha2{};
    std::optional<ErrorCode> exp_form_block{};

    bool linear() const noexcept { return k0 == 0.0; }
};

RiccatiCoeffs coefficients(const MarketParams& params);

/// Tabulated function on a uniform ascending grid with linear interpolation
/// between nodes (clamped beyond the ends).
struct Tabulation {
    std::vector<double> t;
    std::vector<double> v;

    double operator()(double s) const;
};

std::vector<double> uniform_grid(double t_end, int n_steps);

/// Closed-form Q(t). Uses the exponential form
///   Q(t) = alpha1 (1 - E) / (1 - ell E),  E = exp(-sqrt(delta) (T-t)),
/// or the linear-equation solution when k0 == 0. Throws DeltaNonpositive,
/// DegenerateEll or PoleOnInterval when no closed form exists on [0, T].
double q_closed_form(const RiccatiCoeffs& coeffs, const MarketParams& params, double t);

/// Classical RK4 integration of the Riccati equation backward from Q(T)=0 on
/// a uniform grid. Valid for any coefficients (the numeric fallback and the
/// oracle for the closed form). Throws BlowupDetected when |Q| exceeds
/// blowup_bound, signalling finite-time escape.
Tabulation q_numeric(const MarketParams& params, int n_steps, double blowup_bound = 1e8);

/// f1 = -K0 Q + K1 and f2 = [(vol2_total/2 + m - r)/D] (-gamma (s^2+sb^2) Q + c),
/// the coefficients of the offset equation phidot + f1 phi + f2 = 0, phi(T)=0.
std::pair<double, double> f1_f2(const RiccatiCoeffs& coeffs, const MarketParams& params,
                                double q_value);

/// phi(t) = Int_t^T f2(s) exp(Int_t^s f1) ds by composite Simpson quadrature
/// on n_quad nodes (forced odd). Exact zero at t >= T.
double phi_closed_form(const MarketParams& params, const RiccatiCoeffs& coeffs,
                       const std::function<double(double)>& q, double t, int n_quad = 2001);

/// RK4 integration of the offset equation backward from phi(T)=0; the oracle
/// for phi_closed_form.
Tabulation phi_numeric(const MarketParams& params, const RiccatiCoeffs& coeffs,
                       const std::function<double(double)>& q, int n_steps);

namespace detail {

/// Quadrature core shared by phi_closed_form: Int_t^T f2(s) exp(Int_t^s f1) ds.
double phi_from_rates(const std::function<double(double)>& f1,
                      const std::function<double(double)>& f2, double t, double t_end,
                      int n_quad);

/// RK4 core shared by phi_numeric: integrates phidot = -(f1 phi + f2)
/// backward from phi(t_end) = 0 on a uniform grid.
Tabulation phi_rk4(const std::function<double(double)>& f1,
                   const std::function<double(double)>& f2, double t_end, int n_steps);

} // namespace detail

/**
 * The solved value-function pair: Q and phi as evaluators plus dense
 * tabulations on a uniform grid over [0, T].
 *
 * Prefers the closed forms; falls back to RK4 tabulations when delta <= 0.
 * Evaluators and tabulations agree at grid nodes; both are immutable after
 * construction and safe to share across threads.
 */
class ValueFunctions {
public:
    static ValueFunctions solve(const MarketParams& params, int n_grid = 1000,
                                int n_quad = 2001);

    double q(double t) const;
    double phi(double t) const;

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& q_tab() const noexcept { return q_tab_; }
    const std::vector<double>& phi_tab() const noexcept { return phi_tab_; }
    const RiccatiCoeffs& coeffs() const noexcept { return coeffs_; }
    const MarketParams& params() const noexcept { return params_; }
    bool closed_form() const noexcept { return closed_form_; }

private:
    MarketParams params_;
    RiccatiCoeffs coeffs_;
    std::vector<double> grid_;
    std::vector<double> q_tab_;
    std::vector<double> phi_tab_;
    Tabulation q_dense_;          // numeric branch only
    Tabulation phi_interp_;
    bool closed_form_ = false;
};

} // namespace rsinv

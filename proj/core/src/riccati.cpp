#include "rsinv/riccati.hpp"

#include <cmath>
#include <cstddef>

namespace rsinv {

RiccatiCoeffs coefficients(const MarketParams& params) {
    const double s2 = params.vol2_sum();
    const double p = params.rho * params.sigma * params.sigma_bar;
    const double d = params.quad_denom();
    const double g = params.gamma;
    const double c = params.c;

    RiccatiCoeffs out;
    out.k0 = (g * s2 * s2 - 2.0 * g * g * p * s2) / d + 4.0 * g * p * (s2 + p) / d;
    out.k1 = c * params.vol2_total() / d;
    out.h_coef = -c * c / d;
    out.delta = 4.0 * (out.k1 * out.k1 + out.h_coef * out.k0);

    if (out.delta <= 0.0) {
        out.exp_form_block = ErrorCode::delta_nonpositive;
    } else if (out.k0 != 0.0) {
        const double half_root = 0.5 * std::sqrt(out.delta);
        if (out.k1 - half_root == 0.0) {
            out.exp_form_block = ErrorCode::degenerate_ell;
        } else {
            out.ell = (out.k1 + half_root) / (out.k1 - half_root);
            out.alpha1 = (out.k1 + half_root) / out.k0;
            out.alpha2 = (out.k1 - half_root) / out.k0;
        }
    }
    return out;
}

double Tabulation::operator()(double s) const {
    const std::size_t n = t.size();
    if (s <= t.front()) return v.front();
    if (s >= t.back()) return v.back();
    const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
    double pos = (s - t.front()) / h;
    auto i = static_cast<std::size_t>(pos);
    if (i > n - 2) i = n - 2;
    const double w = pos - static_cast<double>(i);
    return v[i] + w * (v[i + 1] - v[i]);
}

std::vector<double> uniform_grid(double t_end, int n_steps) {
    std::vector<double> g(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i)
        g[static_cast<std::size_t>(i)] = t_end * static_cast<double>(i) / n_steps;
    g.back() = t_end;
    return g;
}

namespace {

// Q(t) for the linear case k0 == 0: Qdot + 2 K1 Q + H = 0, Q(T) = 0.
double q_linear_form(const RiccatiCoeffs& cf, double t_end, double t) {
    const double tau = t_end - t;
    if (cf.k1 == 0.0) return cf.h_coef * tau;
    return cf.h_coef / (2.0 * cf.k1) * (std::exp(2.0 * cf.k1 * tau) - 1.0);
}

} // namespace

double q_closed_form(const RiccatiCoeffs& coeffs, const MarketParams& params, double t) {
    const double t_end = params.horizon;
    if (coeffs.linear()) {
        if (coeffs.delta <= 0.0)
            throw Error(ErrorCode::delta_nonpositive, "no closed form for delta <= 0");
        return q_linear_form(coeffs, t_end, t);
    }
    if (coeffs.exp_form_block)
        throw Error(*coeffs.exp_form_block, "closed-form coefficients unavailable");

    const double root = std::sqrt(coeffs.delta);
    const double ell = *coeffs.ell;
    // denominator 1 - ell exp(-root (T-s)) vanishes at s = T - log(ell)/root
    if (ell >= 1.0 && std::log(ell) <= root * t_end)
        throw Error(ErrorCode::pole_on_interval,
                    "closed-form denominator vanishes inside [0, T]");

    const double e = std::exp(-root * (t_end - t));
    return *coeffs.alpha1 * (1.0 - e) / (1.0 - ell * e);
}

namespace {

template <class F>
std::vector<double> rk4_backward(F rhs, double t_end, double y_end, int n_steps,
                                 const double* blowup_bound) {
    std::vector<double> y(static_cast<std::size_t>(n_steps) + 1);
    y[static_cast<std::size_t>(n_steps)] = y_end;
    const double h = t_end / n_steps;
    double yi = y_end;
    for (int i = n_steps; i > 0; --i) {
        const double t = t_end * static_cast<double>(i) / n_steps;
        const double k1 = rhs(t, yi);
        const double k2 = rhs(t - 0.5 * h, yi - 0.5 * h * k1);
        const double k3 = rhs(t - 0.5 * h, yi - 0.5 * h * k2);
        const double k4 = rhs(t - h, yi - h * k3);
        yi -= h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        if (blowup_bound && !(std::abs(yi) <= *blowup_bound))
            throw Error(ErrorCode::blowup_detected, "terminal-value integration escaped");
        y[static_cast<std::size_t>(i) - 1] = yi;
    }
    return y;
}

} // namespace

Tabulation q_numeric(const MarketParams& params, int n_steps, double blowup_bound) {
    if (n_steps < 2) throw std::invalid_argument("q_numeric: n_steps must be >= 2");
    const RiccatiCoeffs cf = coefficients(params);
    const auto rhs = [&cf](double, double q) {
        return cf.k0 * q * q - 2.0 * cf.k1 * q - cf.h_coef;
    };
    Tabulation tab;
    tab.t = uniform_grid(params.horizon, n_steps);
    tab.v = rk4_backward(rhs, params.horizon, 0.0, n_steps, &blowup_bound);
    return tab;
}

std::pair<double, double> f1_f2(const RiccatiCoeffs& coeffs, const MarketParams& params,
                                double q_value) {
    const double f1 = -coeffs.k0 * q_value + coeffs.k1;
    const double f2 = params.excess_rate() / params.quad_denom() *
                      (-params.drift_gain() * q_value + params.c);
    return {f1, f2};
}

namespace detail {

double phi_from_rates(const std::function<double(double)>& f1,
                      const std::function<double(double)>& f2, double t, double t_end,
                      int n_quad) {
    if (t >= t_end) return 0.0;
    int n = n_quad < 3 ? 3 : n_quad;
    if (n % 2 == 0) ++n;
    const std::size_t nn = static_cast<std::size_t>(n);
    const double h = (t_end - t) / static_cast<double>(n - 1);

    std::vector<double> s(nn), a(nn);
    for (std::size_t i = 0; i < nn; ++i) {
        s[i] = (i + 1 == nn) ? t_end : t + h * static_cast<double>(i);
        a[i] = f1(s[i]);
    }

    // cumulative integral F(s_i) = Int_t^{s_i} f1, Simpson on node pairs with
    // the half-panel quadratic rule for odd indices
    std::vector<double> cum(nn);
    cum[0] = 0.0;
    for (std::size_t i = 0; i + 2 < nn; i += 2) {
        cum[i + 1] = cum[i] + h / 12.0 * (5.0 * a[i] + 8.0 * a[i + 1] - a[i + 2]);
        cum[i + 2] = cum[i] + h / 3.0 * (a[i] + 4.0 * a[i + 1] + a[i + 2]);
    }

    double total = 0.0;
    const auto g = [&](std::size_t i) { return f2(s[i]) * std::exp(cum[i]); };
    for (std::size_t i = 0; i + 2 < nn; i += 2)
        total += h / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
    return total;
}

Tabulation phi_rk4(const std::function<double(double)>& f1,
                   const std::function<double(double)>& f2, double t_end, int n_steps) {
    const auto rhs = [&](double t, double phi) { return -(f1(t) * phi + f2(t)); };
    Tabulation tab;
    tab.t = uniform_grid(t_end, n_steps);
    tab.v = rk4_backward(rhs, t_end, 0.0, n_steps, nullptr);
    return tab;
}

} // namespace detail

double phi_closed_form(const MarketParams& params, const RiccatiCoeffs& coeffs,
                       const std::function<double(double)>& q, double t, int n_quad) {
    const auto f1 = [&](double s) { return -coeffs.k0 * q(s) + coeffs.k1; };
    const double scale = params.excess_rate() / params.quad_denom();
    const auto f2 = [&](double s) {
        return scale * (-params.drift_gain() * q(s) + params.c);
    };
    return detail::phi_from_rates(f1, f2, t, params.horizon, n_quad);
}

Tabulation phi_numeric(const MarketParams& params, const RiccatiCoeffs& coeffs,
                       const std::function<double(double)>& q, int n_steps) {
    const double scale = params.excess_rate() / params.quad_denom();
    const auto f1 = [&](double t) { return -coeffs.k0 * q(t) + coeffs.k1; };
    const auto f2 = [&](double t) { return scale * (-params.drift_gain() * q(t) + params.c); };
    return detail::phi_rk4(f1, f2, params.horizon, n_steps);
}

ValueFunctions ValueFunctions::solve(const MarketParams& params, int n_grid, int n_quad) {
    if (n_grid < 2) throw std::invalid_argument("ValueFunctions: n_grid must be >= 2");

    ValueFunctions vf;
    vf.params_ = params;
    vf.coeffs_ = coefficients(params);
    vf.grid_ = uniform_grid(params.horizon, n_grid);
    vf.closed_form_ = vf.coeffs_.linear() ? vf.coeffs_.delta > 0.0
                                          : !vf.coeffs_.exp_form_block.has_value();

    const std::size_t n = vf.grid_.size();
    vf.q_tab_.resize(n);
    vf.phi_tab_.resize(n);

    if (vf.closed_form_) {
        for (std::size_t i = 0; i < n; ++i)
            vf.q_tab_[i] = q_closed_form(vf.coeffs_, params, vf.grid_[i]);
        const auto q_eval = [this_coeffs = vf.coeffs_, p = params](double t) {
            return q_closed_form(this_coeffs, p, t);
        };
        for (std::size_t i = 0; i < n; ++i)
            vf.phi_tab_[i] = phi_closed_form(params, vf.coeffs_, q_eval, vf.grid_[i], n_quad);
    } else {
        // tabulate Q twice as densely so the phi integrator's half steps hit nodes
        vf.q_dense_ = q_numeric(params, 2 * n_grid);
        for (std::size_t i = 0; i < n; ++i) vf.q_tab_[i] = vf.q_dense_.v[2 * i];
        const Tabulation& dense = vf.q_dense_;
        vf.phi_tab_ =
            phi_numeric(params, vf.coeffs_, [&dense](double t) { return dense(t); }, n_grid)
                .v;
    }

    vf.phi_interp_ = Tabulation{vf.grid_, vf.phi_tab_};
    return vf;
}

double ValueFunctions::q(double t) const {
    if (closed_form_) return q_closed_form(coeffs_, params_, t);
    return q_dense_(t);
}

double ValueFunctions::phi(double t) const { return phi_interp_(t); }

} // namespace rsinv

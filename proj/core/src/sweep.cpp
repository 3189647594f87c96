#include "rsinv/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "rsinv/riccati.hpp"

namespace rsinv {

std::vector<double> arange(double first, double last, double step) {
    std::vector<double> values;
    const auto count = static_cast<long>(std::floor((last - first) / step + 1e-9));
    for (long i = 0; i <= count; ++i) values.push_back(first + step * static_cast<double>(i));
    return values;
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
    if (spec.values.empty()) throw std::invalid_argument("sweep: empty value list");
    for (std::size_t i = 1; i < spec.values.size(); ++i)
        if (!(spec.values[i] > spec.values[i - 1]))
            throw std::invalid_argument("sweep: values must be strictly increasing");

    std::vector<SweepRow> rows;
    rows.reserve(spec.values.size());
    for (const double value : spec.values) {
        MarketParams params = spec.fixed;
        (spec.axis == SweepAxis::Gamma ? params.gamma : params.rho) = value;
        validate(params);

        SweepRow row;
        row.axis = spec.axis;
        row.value = value;
        row.t = spec.eval_time;
        row.x = state_from_logprice(params, spec.eval_time, params.lbar0 + spec.k_offset);

        const RiccatiCoeffs coeffs = coefficients(params);
        try {
            row.q_t = q_closed_form(coeffs, params, spec.eval_time);
            const auto q_eval = [&coeffs, &params](double s) {
                return q_closed_form(coeffs, params, s);
            };
            row.phi_t =
                phi_closed_form(params, coeffs, q_eval, spec.eval_time, spec.n_quad);
            const double d = params.quad_denom();
            row.u = (-params.drift_gain() * row.q_t + params.c) / d * row.x -
                    params.drift_gain() * row.phi_t / d - params.excess_rate() / d;
        } catch (const Error&) {
            row.skipped = true;
        }
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "axis,value,t,x,u,Q_t,phi_t\r\n";
    for (const SweepRow& row : rows) {
        os << (row.axis == SweepAxis::Gamma ? "gamma" : "rho") << ',' << num(row.value) << ','
           << num(row.t) << ',' << num(row.x) << ',';
        if (row.skipped)
            os << ",,";
        else
            os << num(row.u) << ',' << num(row.q_t) << ',' << num(row.phi_t);
        os << "\r\n";
    }
}

std::vector<FigureSpec> figure_specs(const MarketParams& base) {
    std::vector<FigureSpec> figures(4);

    figures[0].name = "fig1";
    for (const double rho : arange(0.1, 0.9, 0.1)) {
        SweepSpec spec;
        spec.axis = SweepAxis::Gamma;
        spec.values = arange(0.05, 1.05, 0.05);
        spec.fixed = base;
        spec.fixed.rho = rho;
        figures[0].curves.push_back(spec);
    }

    const auto rho_sweep = [&base](double eval_time, double k_offset) {
        std::vector<SweepSpec> curves;
        for (const double gamma : arange(0.1, 0.9, 0.1)) {
            SweepSpec spec;
            spec.axis = SweepAxis::Rho;
            spec.values = arange(0.05, 0.95, 0.05);
            spec.fixed = base;
            spec.fixed.gamma = gamma;
            spec.eval_time = eval_time;
            spec.k_offset = k_offset;
            curves.push_back(spec);
        }
        return curves;
    };

    figures[1].name = "fig2";
    figures[1].curves = rho_sweep(0.0, 0.0);
    figures[2].name = "fig3";
    figures[2].curves = rho_sweep(0.5, 0.5);
    figures[3].name = "fig4";
    figures[3].curves = rho_sweep(0.5, 2.0);
    return figures;
}

} // namespace rsinv

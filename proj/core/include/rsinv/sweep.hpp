#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rsinv/market.hpp"

namespace rsinv {

enum class SweepAxis { Gamma, Rho };

/**
 * One sensitivity sweep: vary gamma or rho over an increasing value list with
 * everything else fixed, evaluate the optimal proportion at one state point.
 * The state is placed at the log-return offset k_offset above the trend, i.e.
 * x = k_offset + m/c - m eval_time.
 */
struct SweepSpec {
    SweepAxis axis = SweepAxis::Gamma;
    std::vector<double> values;
    MarketParams fixed;
    double eval_time = 0.0;
    double k_offset = 0.0;
    int n_quad = 2001;
};

struct SweepRow {
    SweepAxis axis = SweepAxis::Gamma;
    double value = 0.0;
    double t = 0.0;
    double x = 0.0;
    double u = 0.0;
    double q_t = 0.0;
    double phi_t = 0.0;
    bool skipped = false;  ///< no closed form at this point (recorded, not fatal)
};

/// Solves the Riccati pair and evaluates the feedback law at each swept value.
/// Rows where the solvability condition fails are marked skipped.
std::vector<SweepRow> sweep(const SweepSpec& spec);

/// Header "axis,value,t,x,u,Q_t,phi_t"; one row per point, in input order;
/// skipped points carry empty numeric cells. Byte-identical across reruns.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// A named figure assembled from several sweeps written into one CSV
/// (curves concatenated in order; each curve's values are strictly
/// increasing, so a value reset marks the next curve).
struct FigureSpec {
    std::string name;
    std::vector<SweepSpec> curves;
};

/// The four standard sensitivity figures for a base parameter set:
///   fig1: u vs gamma at t=0, one curve per rho in {0.1,...,0.9};
///   fig2: u vs rho at t=0, one curve per gamma in {0.1,...,0.9};
///   fig3: u vs rho at t=0.5 with log-return k=0.5, same gamma curves;
///   fig4: u vs rho at t=0.5 with log-return k=2, same gamma curves.
std::vector<FigureSpec> figure_specs(const MarketParams& base);

std::vector<double> arange(double first, double last, double step);

} // namespace rsinv

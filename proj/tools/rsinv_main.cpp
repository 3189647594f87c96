#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsinv/market.hpp"
#include "rsinv/policy.hpp"
#include "rsinv/riccati.hpp"
#include "rsinv/simulate.hpp"
#include "rsinv/sweep.hpp"
#include "rsinv/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOptions {
    std::string param_file;
    std::string params_inline;  // JSON text; takes precedence over param_file
    std::string out_dir;
    std::uint64_t seed = 20240601;
    std::int64_t paths = 100000;
    int steps = 1000;
};

rsinv::MarketParams default_market() {
    rsinv::MarketParams p;
    p.r = 0.05;
    p.c = 1.0;
    p.m = 0.55;
    p.lbar0 = 0.0;
    p.sigma = 0.5;
    p.sigma_bar = 0.3;
    p.rho = 0.2;
    p.gamma = 0.5;
    p.horizon = 1.0;
    p.x0 = 1.0;
    return p;
}

rsinv::MarketParams load_params(const CommonOptions& opts) {
    if (!opts.params_inline.empty())
        return rsinv::validate(rsinv::params_from_json(opts.params_inline));
    if (opts.param_file.empty()) return rsinv::validate(default_market());
    std::ifstream in(opts.param_file);
    if (!in) throw rsinv::Error(rsinv::ErrorCode::config_parse,
                                "cannot open parameter file " + opts.param_file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return rsinv::validate(rsinv::params_from_json(buffer.str()));
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path path = dir.empty() ? fs::path(".") : fs::path(dir);
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec && !fs::is_directory(path))
        throw rsinv::Error(rsinv::ErrorCode::output_unwritable,
                           "cannot create output directory " + path.string());
    return path;
}

std::ofstream open_out(const fs::path& file) {
    std::ofstream out(file);
    if (!out)
        throw rsinv::Error(rsinv::ErrorCode::output_unwritable,
                           "cannot write " + file.string());
    return out;
}

std::string params_hash(const rsinv::MarketParams& params) {
    const std::string text = rsinv::params_to_json(params);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void print_manifest(const std::string& cmd, const rsinv::MarketParams& params,
                    const CommonOptions& opts, const fs::path* out_dir) {
    json manifest{{"cmd", cmd},
                  {"version", kVersion},
                  {"seed", opts.seed},
                  {"paths", opts.paths},
                  {"steps", opts.steps},
                  {"params_hash", params_hash(params)}};
    std::cout << manifest.dump() << "\n";
    if (out_dir) open_out(*out_dir / "manifest.json") << manifest.dump(2) << "\n";
}

json coeffs_to_json(const rsinv::RiccatiCoeffs& cf) {
    json out{{"k0", cf.k0}, {"k1", cf.k1}, {"h", cf.h_coef}, {"delta", cf.delta}};
    if (cf.ell) out["ell"] = *cf.ell;
    if (cf.alpha1) out["alpha1"] = *cf.alpha1;
    if (cf.alpha2) out["alpha2"] = *cf.alpha2;
    return out;
}

void write_function_csv(const fs::path& file, const char* value_name,
                        const std::vector<double>& grid, const std::vector<double>& values) {
    auto out = open_out(file);
    out << "t," << value_name << "\r\n";
    char buf[96];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g\r\n", grid[i], values[i]);
        out << buf;
    }
}

int cmd_solve(const CommonOptions& opts, int n_grid, int n_quad) {
    const auto params = load_params(opts);
    const auto vf = rsinv::ValueFunctions::solve(params, n_grid, n_quad);
    const fs::path dir = ensure_out_dir(opts.out_dir);
    print_manifest("solve", params, opts, &dir);

    json solution{{"coeffs", coeffs_to_json(vf.coeffs())},
                  {"closed_form", vf.closed_form()},
                  {"grid", vf.grid()},
                  {"Q", vf.q_tab()},
                  {"phi", vf.phi_tab()}};
    open_out(dir / "solution.json") << solution.dump(2) << "\n";
    write_function_csv(dir / "q.csv", "Q", vf.grid(), vf.q_tab());
    write_function_csv(dir / "phi.csv", "phi", vf.grid(), vf.phi_tab());
    std::cout << "solved: K0=" << vf.coeffs().k0 << " K1=" << vf.coeffs().k1
              << " H=" << vf.coeffs().h_coef << " delta=" << vf.coeffs().delta
              << " Q(0)=" << vf.q(0.0) << " phi(0)=" << vf.phi(0.0) << "\n";
    return 0;
}

int cmd_policy(const CommonOptions& opts, int n_grid, int t_points,
               std::vector<double> x_values) {
    const auto params = load_params(opts);
    const auto vf = rsinv::ValueFunctions::solve(params, n_grid);
    const rsinv::FeedbackPolicy law(std::make_shared<rsinv::ValueFunctions>(vf));
    if (x_values.empty()) x_values = {params.m / params.c};

    const fs::path dir = ensure_out_dir(opts.out_dir);
    print_manifest("policy", params, opts, &dir);
    std::ostringstream csv;
    csv << "t,x,a,b,u\r\n";
    char buf[160];
    for (int i = 0; i < t_points; ++i) {
        const double t = params.horizon * static_cast<double>(i) / (t_points - 1);
        for (const double x : x_values) {
            std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\r\n", t, x,
                          law.a(t), law.b(t), law(t, x));
            csv << buf;
        }
    }
    open_out(dir / "policy.csv") << csv.str();
    std::cout << csv.str();
    return 0;
}

int cmd_simulate(const CommonOptions& opts, const std::string& measure,
                 const std::string& policy, double u_const, bool weights, bool per_path,
                 int n_grid) {
    const auto params = load_params(opts);

    rsinv::ControlLaw law;
    if (policy == "feedback") {
        law = rsinv::ControlLaw::feedback(
            std::make_shared<rsinv::ValueFunctions>(rsinv::ValueFunctions::solve(params, n_grid)));
    } else if (policy == "constant") {
        law = rsinv::ControlLaw::constant(u_const);
    } else if (policy == "zero") {
        law = rsinv::ControlLaw::zero();
    } else {
        throw rsinv::Error(rsinv::ErrorCode::config_parse,
                           "policy must be feedback | constant | zero");
    }

    rsinv::SimConfig cfg;
    cfg.n_paths = opts.paths;
    cfg.n_steps = opts.steps;
    cfg.seed = opts.seed;
    cfg.with_weights = weights;

    const fs::path dir = ensure_out_dir(opts.out_dir);
    print_manifest("simulate", params, opts, &dir);

    json result;
    rsinv::PathEnsemble ensemble;
    if (measure == "P") {
        cfg.measure = rsinv::Measure::P;
        ensemble = rsinv::simulate_reduced(params, law, cfg);
        const auto est = rsinv::estimate_J(params, ensemble);
        result = {{"measure", "P"},
                  {"objective", "E[exp(gamma Int h dt)]"},
                  {"mean", est.mean},
                  {"std_error", est.std_error},
                  {"n", est.n}};
    } else if (measure == "Ptilde") {
        cfg.measure = rsinv::Measure::P_TILDE;
        ensemble = rsinv::simulate_original(params, law, cfg);
        const auto est = rsinv::estimate_hara(params, ensemble);
        result = {{"measure", "Ptilde"},
                  {"objective", "E[X(T)^gamma]/gamma"},
                  {"mean", est.mean},
                  {"std_error", est.std_error},
                  {"n", est.n},
                  {"excluded_paths", ensemble.excluded}};
        if (weights) {
            const auto west = rsinv::mean_and_error(ensemble.rn_weights);
            result["weight_mean"] = west.mean;
            result["weight_std_error"] = west.std_error;
        }
    } else {
        throw rsinv::Error(rsinv::ErrorCode::config_parse, "measure must be P | Ptilde");
    }
    std::cout << result.dump(2) << "\n";
    open_out(dir / "estimate.json") << result.dump(2) << "\n";

    if (per_path) {
        auto out = open_out(dir / "paths.csv");
        out << "path,terminal_state,cost_integral,wealth_terminal,rn_weight\r\n";
        char buf[160];
        for (std::size_t i = 0; i < ensemble.state_terminal.size(); ++i) {
            const double cost =
                i < ensemble.cost_integral.size() ? ensemble.cost_integral[i] : 0.0;
            const double wealth =
                i < ensemble.wealth_terminal.size() ? ensemble.wealth_terminal[i] : 0.0;
            const double weight = i < ensemble.rn_weights.size() ? ensemble.rn_weights[i] : 1.0;
            std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g,%.12g\r\n", i,
                          ensemble.state_terminal[i], cost, wealth, weight);
            out << buf;
        }
    }
    return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& axis, double from, double to,
              double step, double t, double k) {
    const auto params = load_params(opts);
    rsinv::SweepSpec spec;
    spec.axis = axis == "gamma" ? rsinv::SweepAxis::Gamma : rsinv::SweepAxis::Rho;
    if (axis != "gamma" && axis != "rho")
        throw rsinv::Error(rsinv::ErrorCode::config_parse, "axis must be gamma | rho");
    spec.values = rsinv::arange(from, to, step);
    spec.fixed = params;
    spec.eval_time = t;
    spec.k_offset = k;

    const auto rows = rsinv::sweep(spec);
    const fs::path dir = ensure_out_dir(opts.out_dir);
    print_manifest("sweep", params, opts, &dir);
    std::ostringstream csv;
    rsinv::write_sweep_csv(csv, rows);
    open_out(dir / "sweep.csv") << csv.str();
    std::cout << csv.str();
    int skipped = 0;
    for (const auto& row : rows) skipped += row.skipped ? 1 : 0;
    if (skipped > 0)
        std::cerr << "skipped " << skipped << " point(s) without a closed-form solution\n";
    return 0;
}

int cmd_verify(const CommonOptions& opts, std::int64_t fbsde_paths, double eps, double beta,
               int n_grid) {
    const auto params = load_params(opts);
    rsinv::SuiteConfig cfg;
    cfg.mc.n_paths = opts.paths;
    cfg.mc.n_steps = opts.steps;
    cfg.mc.seed = opts.seed;
    cfg.fbsde_paths = fbsde_paths;
    cfg.eps = eps;
    cfg.beta = beta;
    cfg.n_grid = n_grid;

    const fs::path dir = ensure_out_dir(opts.out_dir);
    print_manifest("verify", params, opts, &dir);
    const auto reports = rsinv::run_suite(params, cfg);
    const std::string text = rsinv::reports_to_json(reports);
    std::cout << text << "\n";
    open_out(dir / "verify.json") << text << "\n";
    for (const auto& report : reports)
        std::cerr << (report.passed ? "PASS " : "FAIL ") << (report.gated ? "" : "(info) ")
                  << report.name << ": metric=" << report.metric
                  << " tolerance=" << report.tolerance << "\n";
    return rsinv::any_gated_failure(reports) ? 1 : 0;
}

int cmd_figures(const CommonOptions& opts) {
    const auto params = load_params(opts);
    const fs::path dir = ensure_out_dir(opts.out_dir);
    print_manifest("figures", params, opts, &dir);
    json index = json::array();
    for (const auto& figure : rsinv::figure_specs(params)) {
        std::vector<rsinv::SweepRow> rows;
        json curves = json::array();
        for (const auto& curve : figure.curves) {
            const auto part = rsinv::sweep(curve);
            curves.push_back({{"axis", curve.axis == rsinv::SweepAxis::Gamma ? "gamma" : "rho"},
                              {"fixed_gamma", curve.fixed.gamma},
                              {"fixed_rho", curve.fixed.rho},
                              {"t", curve.eval_time},
                              {"k", curve.k_offset},
                              {"rows", part.size()}});
            rows.insert(rows.end(), part.begin(), part.end());
        }
        std::ostringstream csv;
        rsinv::write_sweep_csv(csv, rows);
        open_out(dir / (figure.name + ".csv")) << csv.str();
        index.push_back({{"figure", figure.name}, {"curves", curves}});
        std::cout << "wrote " << (dir / (figure.name + ".csv")).string() << "\n";
    }
    open_out(dir / "figures.json") << index.dump(2) << "\n";
    return 0;
}

int cmd_run(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in)
        throw rsinv::Error(rsinv::ErrorCode::config_parse,
                           "cannot open config " + config_path);
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        throw rsinv::Error(rsinv::ErrorCode::config_parse, e.what());
    }
    if (!config.is_object() || !config.contains("cmd"))
        throw rsinv::Error(rsinv::ErrorCode::config_parse, "config needs a 'cmd' key");

    CommonOptions opts;
    opts.out_dir = config.value("out_dir", std::string("."));
    opts.seed = config.value("seed", std::uint64_t{20240601});
    opts.paths = config.value("paths", std::int64_t{100000});
    opts.steps = config.value("steps", 1000);
    if (config.contains("params")) opts.params_inline = config["params"].dump();

    const std::string cmd = config["cmd"].get<std::string>();
    if (cmd == "solve")
        return cmd_solve(opts, config.value("grid", 1000), config.value("quad", 2001));
    if (cmd == "policy")
        return cmd_policy(opts, config.value("grid", 1000), config.value("t_points", 11),
                          config.value("x", std::vector<double>{}));
    if (cmd == "simulate") {
        const json sim = config.value("simulate", json::object());
        return cmd_simulate(opts, sim.value("measure", std::string("P")),
                            sim.value("policy", std::string("feedback")), sim.value("u", 0.0),
                            sim.value("weights", false), sim.value("per_path", false),
                            config.value("grid", 1000));
    }
    if (cmd == "sweep") {
        const json sw = config.value("sweep", json::object());
        return cmd_sweep(opts, sw.value("axis", std::string("gamma")), sw.value("from", 0.05),
                         sw.value("to", 0.95), sw.value("step", 0.05), sw.value("t", 0.0),
                         sw.value("k", 0.0));
    }
    if (cmd == "verify") {
        const json v = config.value("verify", json::object());
        return cmd_verify(opts, v.value("fbsde_paths", std::int64_t{10000}),
                          v.value("eps", 0.1), v.value("beta", 1.0),
                          config.value("grid", 1000));
    }
    if (cmd == "figures") return cmd_figures(opts);
    throw rsinv::Error(rsinv::ErrorCode::unknown_subcommand, "unknown cmd '" + cmd + "'");
}

int exit_code_for(const rsinv::Error& err) {
    switch (err.code()) {
        case rsinv::ErrorCode::config_parse: return 2;
        case rsinv::ErrorCode::unknown_subcommand: return 3;
        case rsinv::ErrorCode::output_unwritable: return 4;
        default: return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-sensitive optimal investment: Riccati solver, simulator, verifier"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOptions opts;
    app.add_option("--param-file", opts.param_file, "market parameters JSON file")
        ->expected(1);
    app.add_option("--out-dir", opts.out_dir, "output directory (default: .)");
    app.add_option("--seed", opts.seed, "RNG seed");
    app.add_option("--paths", opts.paths, "Monte Carlo paths");
    app.add_option("--steps", opts.steps, "time steps per path");
    app.fallthrough();

    int n_grid = 1000;
    int n_quad = 2001;
    auto* solve = app.add_subcommand("solve", "solve the Riccati pair, write Q/phi tables");
    solve->add_option("--grid", n_grid, "tabulation grid size");
    solve->add_option("--quad", n_quad, "quadrature nodes for phi");

    int t_points = 11;
    std::vector<double> x_values;
    auto* policy = app.add_subcommand("policy", "tabulate the feedback law");
    policy->add_option("--grid", n_grid, "tabulation grid size");
    policy->add_option("--t-points", t_points, "number of time points");
    policy->add_option("--x", x_values, "state values to evaluate u(t,x) at");

    std::string measure = "P";
    std::string policy_kind = "feedback";
    double u_const = 0.0;
    bool weights = false;
    bool per_path = false;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the objective");
    simulate->add_option("--measure", measure, "P (reduced) or Ptilde (market)");
    simulate->add_option("--policy", policy_kind, "feedback | constant | zero");
    simulate->add_option("--u", u_const, "constant control value");
    simulate->add_flag("--weights", weights, "accumulate change-of-measure weights");
    simulate->add_flag("--per-path", per_path, "write per-path summaries CSV");
    simulate->add_option("--grid", n_grid, "feedback tabulation grid size");

    std::string axis = "gamma";
    double sweep_from = 0.05;
    double sweep_to = 0.95;
    double sweep_step = 0.05;
    double sweep_t = 0.0;
    double sweep_k = 0.0;
    auto* sweep_cmd = app.add_subcommand("sweep", "sensitivity sweep of the optimal proportion");
    sweep_cmd->add_option("--axis", axis, "gamma | rho");
    sweep_cmd->add_option("--from", sweep_from, "first value");
    sweep_cmd->add_option("--to", sweep_to, "last value");
    sweep_cmd->add_option("--step", sweep_step, "step");
    sweep_cmd->add_option("--t", sweep_t, "evaluation time");
    sweep_cmd->add_option("--k", sweep_k, "log-return offset of the state");

    std::int64_t fbsde_paths = 10000;
    double eps = 0.1;
    double beta = 1.0;
    auto* verify = app.add_subcommand("verify", "run the verification suite");
    verify->add_option("--fbsde-paths", fbsde_paths, "paths for the costate residual check");
    verify->add_option("--eps", eps, "perturbation amplitude");
    verify->add_option("--beta", beta, "integrability report exponent");
    verify->add_option("--grid", n_grid, "tabulation grid size");

    std::string config_path;
    auto* run = app.add_subcommand("run", "dispatch from a JSON config");
    run->add_option("config", config_path, "config JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(opts, n_grid, n_quad);
        if (policy->parsed()) return cmd_policy(opts, n_grid, t_points, x_values);
        if (simulate->parsed())
            return cmd_simulate(opts, measure, policy_kind, u_const, weights, per_path, n_grid);
        if (sweep_cmd->parsed())
            return cmd_sweep(opts, axis, sweep_from, sweep_to, sweep_step, sweep_t, sweep_k);
        if (verify->parsed()) return cmd_verify(opts, fbsde_paths, eps, beta, n_grid);
        if (run->parsed()) return cmd_run(config_path);
        throw rsinv::Error(rsinv::ErrorCode::unknown_subcommand, "no subcommand given");
    } catch (const rsinv::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_code_for(err);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

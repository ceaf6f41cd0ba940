#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvtc/errors.hpp"
#include "mvtc/market.hpp"
#include "mvtc/mv_solver.hpp"
#include "mvtc/obstacle_pde.hpp"
#include "mvtc/simulate.hpp"

using nlohmann::json;

namespace {

struct RunConfig {
    mvtc::MarketParams market{};
    mvtc::Position position{};
    std::vector<double> targets;
    mvtc::SolverConfig solver{};
    std::optional<mvtc::McConfig> mc;
    std::string outputs;
};

double need_number(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw mvtc::ConfigError("config: missing or non-numeric field '" + key + "'");
    return j[key].get<double>();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mvtc::ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw mvtc::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    if (!j.contains("market")) throw mvtc::ConfigError("config: missing 'market' object");
    const json& m = j["market"];
    cfg.market.r = need_number(m, "r_per_year");
    cfg.market.alpha = need_number(m, "alpha_per_year");
    cfg.market.sigma = need_number(m, "sigma_per_sqrt_year");
    cfg.market.lambda = need_number(m, "lambda_buy_fee");
    cfg.market.mu = need_number(m, "mu_sell_fee");
    cfg.market.horizon = need_number(m, "horizon_years");
    cfg.market.validate();

    if (!j.contains("position")) throw mvtc::ConfigError("config: missing 'position' object");
    cfg.position.bond = need_number(j["position"], "bond");
    cfg.position.stock = need_number(j["position"], "stock");

    if (j.contains("targets")) {
        if (!j["targets"].is_array())
            throw mvtc::ConfigError("config: 'targets' must be an array of numbers");
        for (const auto& t : j["targets"]) {
            if (!t.is_number()) throw mvtc::ConfigError("config: non-numeric target");
            cfg.targets.push_back(t.get<double>());
        }
    }

    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (g.contains("n_z")) cfg.solver.n_z = g["n_z"].get<int>();
        if (g.contains("n_t")) cfg.solver.n_t = g["n_t"].get<int>();
        if (g.contains("z_max_factor")) cfg.solver.z_max_factor = g["z_max_factor"].get<double>();
        if (cfg.solver.n_z < 16 || cfg.solver.n_t < 16)
            throw mvtc::ConfigError("config: grid.n_z and grid.n_t must be at least 16");
    }
    if (j.contains("penalty")) {
        const json& p = j["penalty"];
        if (p.contains("scale")) cfg.solver.penalty_scale = p["scale"].get<double>();
        if (p.contains("newton_tol")) cfg.solver.newton_tol = p["newton_tol"].get<double>();
        if (p.contains("newton_max")) cfg.solver.newton_max = p["newton_max"].get<int>();
        if (cfg.solver.penalty_scale <= 0.0)
            throw mvtc::ConfigError("config: penalty.scale must be positive");
    }
    if (j.contains("mc")) {
        const json& mc = j["mc"];
        mvtc::McConfig c;
        if (mc.contains("n_paths")) c.n_paths = mc["n_paths"].get<long>();
        if (mc.contains("n_steps")) c.n_steps = mc["n_steps"].get<int>();
        if (mc.contains("seed")) c.seed = mc["seed"].get<std::uint64_t>();
        if (c.n_paths <= 0 || c.n_steps <= 0)
            throw mvtc::ConfigError("config: mc.n_paths and mc.n_steps must be positive");
        cfg.mc = c;
    }
    if (j.contains("outputs")) cfg.outputs = j["outputs"].get<std::string>();
    return cfg;
}

std::string pick_out_dir(const std::string& flag_dir, const RunConfig& cfg) {
    if (!flag_dir.empty()) return flag_dir;
    if (!cfg.outputs.empty()) return cfg.outputs;
    if (const char* env = std::getenv("MVTC_OUT_DIR"); env && *env) return env;
    return ".";
}

json amount_json(const mvtc::Amount& a) {
    return a.is_infinite ? json(nullptr) : json(a.value);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw mvtc::ConfigError("cannot write output file: " + p.string());
    out << text;
}

void write_feasibility(const std::filesystem::path& dir, const mvtc::FeasibilityReport& rep) {
    json j;
    j["t_star_years"] = rep.t_star;
    j["z_sup"] = amount_json(rep.z_sup);
    j["targets"] = {{"empty", rep.targets.empty},
                    {"lower_exclusive", rep.targets.empty ? json(nullptr) : json(rep.targets.lower)},
                    {"upper", rep.targets.empty ? json(nullptr) : amount_json(rep.targets.upper)},
                    {"upper_closed", rep.targets.upper_closed},
                    {"interval", rep.targets.describe()}};
    write_text(dir / "feasibility.json", j.dump(2) + "\n");
}

void write_boundaries(const std::filesystem::path& dir, const mvtc::FreeBoundaries& fb) {
    std::string csv = "t,x_s_star,x_b_star\n";
    char line[128];
    for (std::size_t i = 0; i < fb.t.size(); ++i) {
        if (std::isfinite(fb.buy[i]))
            std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g\n", fb.t[i], fb.sell[i], fb.buy[i]);
        else
            std::snprintf(line, sizeof line, "%.12g,%.12g,-inf\n", fb.t[i], fb.sell[i]);
        csv += line;
    }
    write_text(dir / "boundaries.csv", csv);
}

json solution_json(double z, const mvtc::MVSolution& s) {
    json j;
    j["target_mean"] = z;
    j["stay_put"] = s.stay_put;
    j["ell_star"] = s.stay_put ? json(nullptr) : json(s.ell_star);
    j["adjusted"] = {{"bond", s.adjusted.bond}, {"stock", s.adjusted.stock}};
    j["initial_trade"] = s.initial_trade;
    j["post_trade"] = {{"bond", s.post_trade.bond}, {"stock", s.post_trade.stock}};
    j["variance"] = std::isfinite(s.variance) ? json(s.variance) : json(nullptr);
    return j;
}

void write_frontier(const std::filesystem::path& dir,
                    const std::vector<mvtc::FrontierPoint>& pts) {
    std::string csv = "z,variance\n";
    char line[96];
    for (const auto& p : pts) {
        if (p.ok)
            std::snprintf(line, sizeof line, "%.12g,%.12g\n", p.target_mean, p.variance);
        else
            std::snprintf(line, sizeof line, "%.12g,\n", p.target_mean);
        csv += line;
    }
    write_text(dir / "frontier.csv", csv);
}

void write_schema(const std::filesystem::path& dir) {
    json j;
    j["boundaries.csv"] = {
        {"columns", {"t", "x_s_star", "x_b_star"}},
        {"notes",
         "t in years, boundaries are bond/stock ratios; x_b_star is the literal -inf "
         "once the buy region is empty"}};
    j["frontier.csv"] = {
        {"columns", {"z", "variance"}},
        {"notes", "variance empty when the target is a stay-put corner or infeasible"}};
    write_text(dir / "schema.json", j.dump(2) + "\n");
}

int run_solve(const RunConfig& cfg, const std::filesystem::path& dir, bool verbose) {
    const mvtc::FeasibilityReport rep = mvtc::feasible_targets(cfg.position, cfg.market);
    write_feasibility(dir, rep);
    if (verbose)
        std::cerr << "feasible targets: " << rep.targets.describe() << "\n";

    const mvtc::SolvedMarket m = mvtc::SolvedMarket::build(cfg.market, cfg.solver);
    write_boundaries(dir, m.boundaries());
    if (verbose)
        for (const auto& d : m.obstacle->diagnostics) std::cerr << "pde: " << d << "\n";

    for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
        const mvtc::MVSolution s = mvtc::solve_target(m, {cfg.position, cfg.targets[i]});
        write_text(dir / ("solution_" + std::to_string(i) + ".json"),
                   solution_json(cfg.targets[i], s).dump(2) + "\n");
        if (verbose)
            std::cerr << "target " << cfg.targets[i] << ": ell*=" << s.ell_star
                      << " variance=" << s.variance << (s.stay_put ? " (stay put)" : "") << "\n";
        if (i == 0 && cfg.mc && !s.stay_put) {
            const mvtc::SimulationReport mc =
                mvtc::simulate(s.post_trade, s.ell_star, m.boundaries(), cfg.market, *cfg.mc);
            json j;
            j["n_paths"] = mc.n_paths;
            j["n_steps"] = mc.n_steps;
            j["mean_w"] = mc.mean_w;
            j["mean_w_ci95"] = mc.mean_w_ci;
            j["var_w"] = mc.var_w;
            j["var_w_ci95"] = mc.var_w_ci;
            j["mean_bought"] = mc.mean_bought;
            j["mean_sold"] = mc.mean_sold;
            j["fraction_time_on_sell"] = mc.fraction_time_on_sell;
            j["fraction_time_on_buy"] = mc.fraction_time_on_buy;
            j["buy_contacts_after_t0"] = mc.buy_contacts_after_t0;
            j["short_covers"] = mc.short_covers;
            j["corner_events"] = mc.corner_events;
            j["discarded"] = mc.discarded;
            j["max_conservation_error"] = mc.max_conservation_error;
            write_text(dir / "mc_report.json", j.dump(2) + "\n");
        }
    }
    if (cfg.targets.size() > 1)
        write_frontier(dir, mvtc::efficient_frontier(m, cfg.position, cfg.targets));
    return 0;
}

int run_plotdata(const RunConfig& cfg, const std::filesystem::path& dir, bool verbose) {
    const mvtc::FeasibilityReport rep = mvtc::feasible_targets(cfg.position, cfg.market);
    const mvtc::SolvedMarket m = mvtc::SolvedMarket::build(cfg.market, cfg.solver);
    write_boundaries(dir, m.boundaries());
    write_schema(dir);

    std::vector<double> sweep = cfg.targets;
    if (sweep.empty() && !rep.targets.empty) {
        // 40-point sweep across the solvable interval (or a unit-scale span
        // above the lower bound when it is unbounded)
        const double lo = rep.targets.lower;
        const double span = rep.targets.upper.is_infinite
                                ? 2.0 * std::max(1.0, std::abs(lo))
                                : rep.targets.upper.value - lo;
        for (int i = 1; i <= 40; ++i) sweep.push_back(lo + span * i / 41.0);
    }
    write_frontier(dir, mvtc::efficient_frontier(m, cfg.position, sweep));
    if (verbose) std::cerr << "wrote boundaries.csv, frontier.csv, schema.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-variance portfolio selection under proportional transaction costs"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    bool verbose = false;
    app.add_flag("--verbose", verbose, "log progress to stderr");
    app.add_option("--out", out_dir, "output directory (overrides config and MVTC_OUT_DIR)");
    CLI::App* solve_cmd = app.add_subcommand("solve", "solve the configured targets");
    solve_cmd->add_option("config", config_path, "JSON run configuration")->required();
    CLI::App* plot_cmd = app.add_subcommand("plotdata", "emit boundary and frontier plot data");
    plot_cmd->add_option("config", config_path, "JSON run configuration")->required();
    solve_cmd->fallthrough();
    plot_cmd->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = load_config(config_path);
        const std::filesystem::path dir = pick_out_dir(out_dir, cfg);
        std::filesystem::create_directories(dir);
        if (solve_cmd->parsed()) return run_solve(cfg, dir, verbose);
        return run_plotdata(cfg, dir, verbose);
    } catch (const mvtc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mvtc::FeasibilityError& e) {
        std::cerr << "infeasible target: " << e.what() << "\n";
        return 3;
    } catch (const mvtc::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

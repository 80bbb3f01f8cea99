// Command-line front end: every subcommand loads a scenario (builtin by name
// or from a config file), applies the seed/paths overrides, and drives the
// corresponding slice of the pipeline. Exit codes: 0 success / all checks
// pass, 1 checks failed, 2 error.
#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qbsde/bounds.hpp"
#include "qbsde/config.hpp"
#include "qbsde/csv.hpp"
#include "qbsde/drivers.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/oracles.hpp"
#include "qbsde/path_ensemble.hpp"
#include "qbsde/scenario.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/terminal.hpp"

namespace fs = std::filesystem;
using namespace qbsde;

namespace {

struct CommonOpts {
    std::string config;
    std::string scenario = "quadratic_linear";
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    long paths = 0;
    bool paths_set = false;
};

void attach_common(CLI::App* cmd, CommonOpts& opts, bool with_model = true) {
    cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
    if (!with_model) return;
    auto* config = cmd->add_option("--config", opts.config,
                                   "Scenario config file (key = value with [section] headers)")
                       ->check(CLI::ExistingFile);
    std::string names;
    for (const std::string& n : builtin_scenario_names()) {
        names += names.empty() ? n : ", " + n;
    }
    cmd->add_option("--scenario", opts.scenario, "Builtin scenario name (" + names + ")")
        ->capture_default_str()
        ->excludes(config);
    cmd->add_option("--seed", opts.seed, "Override the scenario's master seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--paths", opts.paths, "Override the scenario's path count")
        ->check(CLI::PositiveNumber)
        ->each([&opts](const std::string&) { opts.paths_set = true; });
}

Scenario load_scenario(const CommonOpts& opts) {
    Scenario sc = opts.config.empty() ? builtin_scenario(opts.scenario)
                                      : scenario_from_config(Config::load(opts.config));
    if (opts.seed_set) sc.seed = opts.seed;
    if (opts.paths_set) sc.paths = opts.paths;
    return sc;
}

void write_artifact(const fs::path& dir, const std::string& name,
                    const std::function<void(std::ostream&)>& body) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ReportError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    std::ofstream os(dir / name);
    body(os);
    os.flush();
    if (!os.good()) throw ReportError("failed to write '" + (dir / name).string() + "'");
    std::cout << "wrote " << (dir / name).string() << '\n';
}

int cmd_simulate(const CommonOpts& opts) {
    const Scenario sc = load_scenario(opts);
    validate_scenario(sc);
    const PathEnsemble ensemble =
        simulate_brownian(build_grid(sc.horizon, sc.steps), 1, sc.paths, SeedSpec{sc.seed});
    write_artifact(opts.out, "paths.csv", [&](std::ostream& os) { write_paths_csv(os, ensemble); });
    std::cout << sc.paths << " paths, " << sc.steps << " steps, horizon "
              << format_double(sc.horizon) << ", seed " << sc.seed << '\n';
    return 0;
}

int cmd_bounds(const CommonOpts& opts) {
    const Scenario sc = load_scenario(opts);
    validate_scenario(sc);
    if (!sc.use_bounds) {
        throw ConfigError("scenario '" + sc.name + "' has the a priori band switched off");
    }
    const PathEnsemble ensemble =
        simulate_brownian(build_grid(sc.horizon, sc.steps), 1, sc.paths, SeedSpec{sc.seed});
    const TerminalFunction terminal = make_terminal(sc.terminal, sc.terminal_params);
    const BoundProcess band = compute_bounds(ensemble, terminal, sc.envelope);
    write_artifact(opts.out, "bounds.csv", [&](std::ostream& os) { write_bounds_csv(os, band); });
    std::cout << "t=0 exponential bound " << format_double(band.sample_exp_bound)
              << ", top-1% tail share " << format_double(band.sample_tail_share) << '\n';
    return 0;
}

int cmd_oracle(const CommonOpts& opts) {
    const Scenario sc = load_scenario(opts);
    validate_scenario(sc);
    const std::vector<OracleRow> rows = oracle_curve(sc);
    write_artifact(opts.out, "oracle.csv",
                   [&](std::ostream& os) { write_oracle_csv(os, rows); });
    for (const OracleRow& row : rows) {
        if (row.t == 0.0 && row.x == 0.0) {
            std::cout << "oracle y0 " << format_double(row.y) << '\n';
            break;
        }
    }
    return 0;
}

int cmd_solve(const CommonOpts& opts) {
    const Scenario sc = load_scenario(opts);
    validate_scenario(sc);
    const PathEnsemble ensemble =
        simulate_brownian(build_grid(sc.horizon, sc.steps), 1, sc.paths, SeedSpec{sc.seed});
    const Driver driver = make_driver(sc.driver, sc.driver_params);
    const TerminalFunction terminal = make_terminal(sc.terminal, sc.terminal_params);

    std::optional<BoundProcess> band;
    SolverOptions options;
    options.regression.degree = sc.degree;
    options.implicit = sc.implicit;
    options.z_cap = sc.z_cap;
    if (sc.clip_to_bounds) {
        band = compute_bounds(ensemble, terminal, sc.envelope);
        write_artifact(opts.out, "bounds.csv",
                       [&](std::ostream& os) { write_bounds_csv(os, *band); });
        options.clip_to_bounds = &*band;
    }

    const SolverResult result = solve_lsmc(ensemble, driver, terminal, options);
    write_artifact(opts.out, "solution.csv",
                   [&](std::ostream& os) { write_solution_csv(os, result); });
    std::cout << "y0 " << format_double(result.y0) << " (se " << format_double(result.y0_se)
              << ")\n";
    return 0;
}

int report_exit(const RunSummary& summary) { return summary.all_pass ? 0 : 1; }

int cmd_verify(const CommonOpts& opts) {
    const Scenario sc = load_scenario(opts);
    const RunSummary summary = run_scenario(sc, opts.out);
    std::ifstream is(fs::path(opts.out) / "summary.txt");
    std::cout << is.rdbuf();
    return report_exit(summary);
}

// --- catalog-level consolidation ----------------------------------------

struct CatalogRow {
    std::string name;
    long passed = 0;
    long total = 0;
    bool all_pass = false;
};

void write_catalog_report(const std::string& out, const std::vector<CatalogRow>& rows) {
    bool all = true;
    long passed = 0, total = 0;
    for (const CatalogRow& row : rows) {
        all = all && row.all_pass;
        passed += row.passed;
        total += row.total;
    }
    write_artifact(out, "summary.csv", [&](std::ostream& os) {
        os << "key,value\n";
        os << "scenarios," << rows.size() << '\n';
        for (const CatalogRow& row : rows) {
            os << row.name << ".checks_passed," << row.passed << '\n';
            os << row.name << ".checks_total," << row.total << '\n';
            os << row.name << ".all_pass," << (row.all_pass ? 1 : 0) << '\n';
        }
        os << "checks_passed," << passed << '\n';
        os << "checks_total," << total << '\n';
        os << "all_pass," << (all ? 1 : 0) << '\n';
    });
    write_artifact(out, "summary.txt", [&](std::ostream& os) {
        os << "scenarios: " << rows.size() << '\n';
        for (const CatalogRow& row : rows) {
            std::string name = row.name;
            if (name.size() < 30) name.resize(30, ' ');
            os << "  " << (row.all_pass ? "PASS" : "FAIL") << "  " << name << ' ' << row.passed
               << '/' << row.total << " checks\n";
        }
        os << "overall: " << (all ? "PASS" : "FAIL") << '\n';
    });
}

CatalogRow catalog_row(const RunSummary& summary) {
    CatalogRow row;
    row.name = summary.scenario;
    row.total = static_cast<long>(summary.checks.size());
    for (const CheckReport& c : summary.checks) row.passed += c.pass ? 1 : 0;
    row.all_pass = summary.all_pass;
    return row;
}

int cmd_run(const CommonOpts& opts, bool run_all) {
    if (!run_all) {
        return cmd_verify(opts);
    }
    if (!opts.config.empty()) {
        throw ConfigError("--all runs the builtin catalog; it cannot combine with --config");
    }
    std::vector<CatalogRow> rows;
    for (const std::string& name : builtin_scenario_names()) {
        Scenario sc = builtin_scenario(name);
        if (opts.seed_set) sc.seed = opts.seed;
        if (opts.paths_set) sc.paths = opts.paths;
        const RunSummary summary = run_scenario(sc, opts.out + "/" + name);
        rows.push_back(catalog_row(summary));
        std::cout << (summary.all_pass ? "PASS" : "FAIL") << "  " << name << "  ("
                  << rows.back().passed << '/' << rows.back().total << " checks)\n";
    }
    write_catalog_report(opts.out, rows);
    const bool all =
        std::all_of(rows.begin(), rows.end(), [](const CatalogRow& r) { return r.all_pass; });
    std::cout << "overall: " << (all ? "PASS" : "FAIL") << '\n';
    return all ? 0 : 1;
}

int cmd_report(const CommonOpts& opts) {
    const fs::path base(opts.out);
    if (fs::exists(base / "checks.csv")) {
        const RunSummary summary = read_summary(opts.out);
        write_report(summary, opts.out);
        std::ifstream is(base / "summary.txt");
        std::cout << is.rdbuf();
        return report_exit(summary);
    }

    // Catalog layout: consolidate every subdirectory that holds a run.
    std::vector<std::string> names;
    if (fs::is_directory(base)) {
        for (const fs::directory_entry& entry : fs::directory_iterator(base)) {
            if (entry.is_directory() && fs::exists(entry.path() / "checks.csv")) {
                names.push_back(entry.path().filename().string());
            }
        }
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) {
        throw ReportError("no run artifacts under '" + base.string() +
                          "': expected checks.csv + summary.csv from a finished run");
    }
    std::vector<CatalogRow> rows;
    bool all = true;
    for (const std::string& name : names) {
        const RunSummary summary = read_summary((base / name).string());
        write_report(summary, (base / name).string());
        rows.push_back(catalog_row(summary));
        all = all && summary.all_pass;
        std::cout << (summary.all_pass ? "PASS" : "FAIL") << "  " << name << "  ("
                  << rows.back().passed << '/' << rows.back().total << " checks)\n";
    }
    write_catalog_report(opts.out, rows);
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scalar quadratic-growth BSDE solver and verification suite"};
    app.require_subcommand(1);

    CommonOpts opts;
    bool run_all = false;

    CLI::App* simulate = app.add_subcommand("simulate", "Write the Brownian ensemble (paths.csv)");
    attach_common(simulate, opts);
    CLI::App* bounds = app.add_subcommand("bounds", "Write the conditional a priori band (bounds.csv)");
    attach_common(bounds, opts);
    CLI::App* oracle = app.add_subcommand("oracle", "Write the scenario's reference curve (oracle.csv)");
    attach_common(oracle, opts);
    CLI::App* solve = app.add_subcommand("solve", "Run the backward solver (solution.csv)");
    attach_common(solve, opts);
    CLI::App* verify =
        app.add_subcommand("verify", "Run the pipeline and its checks; exit 0 iff all pass");
    attach_common(verify, opts);
    CLI::App* run = app.add_subcommand("run", "Full pipeline; --all sweeps the builtin catalog");
    attach_common(run, opts);
    run->add_flag("--all", run_all, "Run every builtin scenario into <out>/<name>");
    CLI::App* report =
        app.add_subcommand("report", "Re-read artifacts in --out and regenerate the summaries");
    attach_common(report, opts, /*with_model=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (bounds->parsed()) return cmd_bounds(opts);
        if (oracle->parsed()) return cmd_oracle(opts);
        if (solve->parsed()) return cmd_solve(opts);
        if (verify->parsed()) return cmd_verify(opts);
        if (run->parsed()) return cmd_run(opts, run_all);
        if (report->parsed()) return cmd_report(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

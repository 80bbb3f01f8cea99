#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qbsde/config.hpp"
#include "qbsde/envelopes.hpp"
#include "qbsde/oracles.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/verification.hpp"

namespace qbsde {

// A fully specified experiment: model, discretization, solver settings, and
// the checks the run is expected to pass. Everything downstream (CLI, report
// files, the builtin catalog) goes through this struct, so a scenario written
// to disk and read back reproduces the run bit for bit.
struct Scenario {
    std::string name = "scenario";

    double horizon = 1.0;
    int steps = 32;
    long paths = 4096;
    std::uint64_t seed = 1;

    std::string driver = "pure_quadratic";
    std::map<std::string, double> driver_params;
    std::string terminal = "linear";
    std::map<std::string, double> terminal_params;

    // Growth envelope the run is analyzed under; must dominate the driver.
    QuadraticEnvelope envelope{0.0, 0.0, 1.0};
    bool use_bounds = true;   // conditional a priori band + sandwich check
    bool use_energy = true;   // Z-energy estimate check
    bool clip_to_bounds = false;

    int degree = 4;
    bool implicit = true;
    double z_cap = 0.0;
    bool terminal_in_basis = false;  // add g(state) as a regression column

    // Nonempty upper_caps turns on the truncated-terminal family and its
    // monotonicity / continuity checks; lower_caps additionally makes the
    // truncation two sided.
    std::vector<double> upper_caps;
    std::vector<double> lower_caps;

    // Nonempty = solve a second equation with this terminal (which must
    // dominate the main one pointwise) and check the comparison order.
    std::string comparison_terminal;
    std::map<std::string, double> comparison_params;

    // Run the dominating-driver consistency check (driver must carry the
    // sublinear-in-z structure constants).
    bool l1_domination = false;

    // none | quadratic | linear | ode. quadratic/linear pin the driver to the
    // matching catalog entry; ode needs a z-independent driver and a constant
    // terminal. oracle_param is gamma resp. beta for the first two.
    std::string oracle = "none";
    double oracle_param = 1.0;
    double oracle_tol = 0.1;  // |y0 - oracle| budget on top of se_mult * se

    double se_mult = 3.0;
    double violation_threshold = 0.01;
    double norm_beta = 1.0;

    bool operator==(const Scenario&) const = default;
};

// Config round trip. Sections: [scenario], [driver], [terminal], [envelope],
// [solver], [checks], and optionally [comparison]. Driver/terminal/comparison
// sections hold a label plus free numeric parameters; the other sections
// reject unknown keys. scenario_from_config(scenario_to_config(s)) == s.
Scenario scenario_from_config(const Config& config);
Config scenario_to_config(const Scenario& scenario);

// Named preconfigured experiments covering the solver's operating envelope.
std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(const std::string& name);  // ConfigError on unknown name

// Checks the standing assumptions before any solve: the driver stays inside
// the scenario envelope on a coefficient-resolving lattice, the terminal has
// the exponential moment order the band needs, the implicit step is
// well-posed at this step size, oracle and comparison premises hold, and the
// truncation grid is sane. Malformed settings throw ConfigError; violated
// model assumptions throw HypothesisError with the failing quantity.
void validate_scenario(const Scenario& scenario);

// Reference curve for the scenario's declared oracle: nine time slices with
// 41 states each (a single state for the ode oracle, whose solution does not
// depend on it). ConfigError when the scenario declares oracle = none.
std::vector<OracleRow> oracle_curve(const Scenario& scenario);

// Everything a finished run reports. checks holds one row per executed check;
// all_pass is their conjunction.
struct RunSummary {
    std::string scenario;
    std::string driver;
    std::string terminal;
    double horizon = 0.0;
    int steps = 0;
    long paths = 0;
    std::uint64_t seed = 0;

    double y0 = 0.0;
    double y0_se = 0.0;
    double terminal_abs_mean = 0.0;
    double oracle_y0 = 0.0;   // nan when the scenario has no oracle
    double oracle_gap = 0.0;  // |y0 - oracle_y0|, nan likewise

    bool energy_used = false;
    EnergyReport energy;
    NormReport norms;

    std::vector<CheckReport> checks;
    bool all_pass = false;
};

// Validates, runs the full pipeline, and writes every artifact into out_dir:
// scenario.cfg, paths.csv, bounds.csv (when the band is on), oracle.csv (when
// an oracle is set), solution.csv, checks.csv, summary.csv, summary.txt.
RunSummary run_scenario(const Scenario& scenario, const std::string& out_dir);

// Rebuilds the summary from checks.csv + summary.csv in dir. Throws
// ReportError when either artifact is missing or malformed, so a consolidation
// pass fails loudly instead of inventing a clean report.
RunSummary read_summary(const std::string& dir);

// Writes checks.csv, summary.csv and summary.txt for an in-memory summary.
// write_report(read_summary(dir), dir) reproduces the files byte for byte.
void write_report(const RunSummary& summary, const std::string& dir);

}  // namespace qbsde

#include "qbsde/scenario.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qbsde/bounds.hpp"
#include "qbsde/csv.hpp"
#include "qbsde/drivers.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/oracles.hpp"
#include "qbsde/path_ensemble.hpp"
#include "qbsde/terminal.hpp"

namespace fs = std::filesystem;

namespace qbsde {
namespace {

constexpr const char* kOracleKinds[] = {"none", "quadratic", "linear", "ode"};

void put_params(Config& config, const std::string& section,
                const std::map<std::string, double>& params) {
    for (const auto& [key, value] : params) {
        config.set(section, key, format_double(value));
    }
}

std::map<std::string, double> take_params(const Config& config, const std::string& section) {
    std::map<std::string, double> params;
    if (std::find(config.sections().begin(), config.sections().end(), section) ==
        config.sections().end()) {
        return params;
    }
    for (const std::string& key : config.keys(section)) {
        if (key == "label") continue;
        params[key] = config.get_double(section, key);
    }
    return params;
}

std::string join_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

void reject_unknown_keys(const Config& config, const std::string& section,
                         std::initializer_list<const char*> known) {
    for (const std::string& key : config.keys(section)) {
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end()) {
            throw ConfigError("[" + section + "] has no key '" + key + "'");
        }
    }
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

double dfdy_at(const Driver& driver, double t, double y, std::span<const double> z) {
    if (driver.dfdy) return driver.dfdy(t, y, z);
    const double h = 1e-6 * std::max(1.0, std::abs(y));
    return (driver.f(t, y + h, z) - driver.f(t, y - h, z)) / (2.0 * h);
}

void require_increasing_caps(const std::vector<double>& caps, const char* which) {
    for (std::size_t i = 0; i < caps.size(); ++i) {
        if (!(caps[i] > 0.0)) {
            throw ConfigError(std::string(which) + " truncation caps must be positive");
        }
        if (i > 0 && !(caps[i] > caps[i - 1])) {
            throw ConfigError(std::string(which) + " truncation caps must be strictly increasing");
        }
    }
}

// The scenario envelope has to dominate the driver everywhere, not just where
// this lattice looks; for drivers that are polynomial in y and |z| (the whole
// quadratic-class catalog) a wide lattice pins the coefficients, so a lattice
// pass really is a global pass.
void check_envelope_dominates(const Driver& driver, const QuadraticEnvelope& envelope,
                              double horizon) {
    double worst = 0.0, wy = 0.0, wz = 0.0;
    for (double t : {0.0, 0.5 * horizon, horizon}) {
        for (int iy = -25; iy <= 25; ++iy) {
            const double y = 2.0 * iy;
            for (int iz = -25; iz <= 25; ++iz) {
                const double zv = 2.0 * iz;
                const std::span<const double> z(&zv, 1);
                const double excess =
                    std::abs(driver.f(t, y, z)) - envelope.bound(y, zv * zv);
                if (excess > worst) {
                    worst = excess;
                    wy = y;
                    wz = zv;
                }
            }
        }
    }
    if (worst > 1e-9) {
        throw HypothesisError("scenario envelope does not dominate driver '" + driver.label +
                              "': excess " + format_double(worst) + " at y=" + format_double(wy) +
                              ", z=" + format_double(wz));
    }
}

void check_oracle_premises(const Scenario& sc, const Driver& driver,
                           const TerminalFunction& terminal) {
    if (sc.oracle == "quadratic") {
        const double gamma = param_or(sc.driver_params, "gamma", 1.0);
        if (sc.driver != "pure_quadratic" || std::abs(gamma - sc.oracle_param) > 1e-12) {
            throw ConfigError(
                "the quadratic oracle assumes the pure_quadratic driver with gamma equal to "
                "oracle_param");
        }
        const MomentCheck mc =
            check_exponential_moment(terminal, sc.oracle_param, 0.0, sc.horizon);
        if (!mc.ok) {
            throw HypothesisError("terminal '" + terminal.label +
                                  "' lacks the exponential moment of order " +
                                  format_double(mc.required) + " the quadratic oracle needs " +
                                  "(certificate stops at " + format_double(mc.available) + ")");
        }
    } else if (sc.oracle == "linear") {
        const double beta = param_or(sc.driver_params, "beta", 1.0);
        if (sc.driver != "linear" || std::abs(beta - sc.oracle_param) > 1e-12) {
            throw ConfigError(
                "the linear oracle assumes the linear driver with beta equal to oracle_param");
        }
        if (!terminal.integrable) {
            throw HypothesisError("terminal '" + terminal.label +
                                  "' is not integrable, so the linear oracle mean diverges");
        }
    } else if (sc.oracle == "ode") {
        if (terminal.label.rfind("constant", 0) != 0) {
            throw ConfigError("the ode oracle needs a constant terminal condition");
        }
        const double probe = 0.7;
        const std::span<const double> z(&probe, 1);
        const std::vector<double> zero(1, 0.0);
        for (double t : {0.0, 0.5 * sc.horizon, sc.horizon}) {
            for (double y : {-3.0, 0.0, 2.0, 7.0}) {
                if (std::abs(driver.f(t, y, z) - driver.f(t, y, zero)) > 1e-10) {
                    throw ConfigError("the ode oracle needs a z-independent driver");
                }
            }
        }
    }
}

std::string list_known(std::span<const std::string> names) {
    std::string out;
    for (const std::string& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    os << text;
    os.flush();
    if (!os.good()) {
        throw ReportError("failed to write '" + path.string() + "'");
    }
}

// --- summary.csv serialization ------------------------------------------

std::string bool01(bool b) { return b ? "1" : "0"; }

std::string render_summary_csv(const RunSummary& s) {
    long passed = 0;
    for (const CheckReport& c : s.checks) passed += c.pass ? 1 : 0;
    std::ostringstream os;
    os << "key,value\n";
    os << "scenario," << s.scenario << '\n';
    os << "driver," << s.driver << '\n';
    os << "terminal," << s.terminal << '\n';
    os << "horizon," << format_double(s.horizon) << '\n';
    os << "steps," << s.steps << '\n';
    os << "paths," << s.paths << '\n';
    os << "seed," << s.seed << '\n';
    os << "y0," << format_double(s.y0) << '\n';
    os << "y0_se," << format_double(s.y0_se) << '\n';
    os << "terminal_abs_mean," << format_double(s.terminal_abs_mean) << '\n';
    os << "oracle_y0," << format_double(s.oracle_y0) << '\n';
    os << "oracle_gap," << format_double(s.oracle_gap) << '\n';
    os << "energy_used," << bool01(s.energy_used) << '\n';
    os << "energy_lhs," << format_double(s.energy.lhs) << '\n';
    os << "energy_rhs," << format_double(s.energy.rhs) << '\n';
    os << "energy_slack," << format_double(s.energy.slack) << '\n';
    os << "energy_pass," << bool01(s.energy.pass) << '\n';
    os << "norm_beta," << format_double(s.norms.beta) << '\n';
    os << "s_norm," << format_double(s.norms.s_norm) << '\n';
    os << "m_norm," << format_double(s.norms.m_norm) << '\n';
    os << "class_d_level," << format_double(s.norms.class_d_level) << '\n';
    os << "class_d_tail," << format_double(s.norms.class_d_tail) << '\n';
    os << "tail_level," << format_double(s.norms.tail_level) << '\n';
    os << "uniformly_integrable," << bool01(s.norms.uniformly_integrable) << '\n';
    os << "checks_total," << s.checks.size() << '\n';
    os << "checks_passed," << passed << '\n';
    os << "all_pass," << bool01(s.all_pass) << '\n';
    return os.str();
}

std::string render_summary_txt(const RunSummary& s) {
    long passed = 0;
    for (const CheckReport& c : s.checks) passed += c.pass ? 1 : 0;
    std::ostringstream os;
    os << "scenario: " << s.scenario << '\n';
    os << "model: driver " << s.driver << ", terminal " << s.terminal << '\n';
    os << "grid: horizon " << format_double(s.horizon) << ", steps " << s.steps << ", paths "
       << s.paths << ", seed " << s.seed << '\n';
    os << "y0: " << format_double(s.y0) << " (se " << format_double(s.y0_se) << "), E|terminal| "
       << format_double(s.terminal_abs_mean) << '\n';
    if (!std::isnan(s.oracle_y0)) {
        os << "oracle: y0 " << format_double(s.oracle_y0) << ", gap "
           << format_double(s.oracle_gap) << '\n';
    }
    if (s.energy_used) {
        os << "energy: lhs " << format_double(s.energy.lhs) << " vs "
           << format_double(s.energy.slack) << " * rhs " << format_double(s.energy.rhs) << " -> "
           << (s.energy.pass ? "pass" : "FAIL") << '\n';
    }
    os << "norms (beta " << format_double(s.norms.beta) << "): sup "
       << format_double(s.norms.s_norm) << ", quadratic-variation "
       << format_double(s.norms.m_norm) << '\n';
    os << "stopping-time probe: worst mean " << format_double(s.norms.class_d_level) << ", tail "
       << format_double(s.norms.class_d_tail) << " at level " << format_double(s.norms.tail_level)
       << " -> " << (s.norms.uniformly_integrable ? "uniformly integrable" : "NOT uniformly integrable")
       << '\n';
    os << "checks: " << passed << "/" << s.checks.size() << " passed\n";
    for (const CheckReport& c : s.checks) {
        std::string name = c.check;
        if (name.size() < 22) name.resize(22, ' ');
        os << "  " << (c.pass ? "pass" : "FAIL") << "  " << name << " rate "
           << format_double(c.violation_rate) << " vs threshold " << format_double(c.threshold)
           << '\n';
    }
    os << "overall: " << (s.all_pass ? "PASS" : "FAIL") << '\n';
    return os.str();
}

// --- summary.csv / checks.csv parsing -----------------------------------

std::vector<std::string> read_lines_or_report(const fs::path& path) {
    std::ifstream is(path);
    if (!is.good()) {
        throw ReportError("missing artifact '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double report_double(const std::string& text, const std::string& what) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ReportError(what + ": '" + text + "' is not a number");
    }
    return value;
}

long report_long(const std::string& text, const std::string& what) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const long value = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        throw ReportError(what + ": '" + text + "' is not an integer");
    }
    return value;
}

bool report_bool(const std::string& text, const std::string& what) {
    if (text == "1") return true;
    if (text == "0") return false;
    throw ReportError(what + ": '" + text + "' is not 0/1");
}

}  // namespace

Config scenario_to_config(const Scenario& sc) {
    Config c;
    c.set("scenario", "name", sc.name);
    c.set("scenario", "horizon", format_double(sc.horizon));
    c.set("scenario", "steps", std::to_string(sc.steps));
    c.set("scenario", "paths", std::to_string(sc.paths));
    c.set("scenario", "seed", std::to_string(sc.seed));

    c.set("driver", "label", sc.driver);
    put_params(c, "driver", sc.driver_params);
    c.set("terminal", "label", sc.terminal);
    put_params(c, "terminal", sc.terminal_params);

    c.set("envelope", "alpha", format_double(sc.envelope.alpha));
    c.set("envelope", "beta", format_double(sc.envelope.beta));
    c.set("envelope", "gamma", format_double(sc.envelope.gamma));

    c.set("solver", "degree", std::to_string(sc.degree));
    c.set("solver", "implicit", sc.implicit ? "true" : "false");
    c.set("solver", "z_cap", format_double(sc.z_cap));
    c.set("solver", "terminal_in_basis", sc.terminal_in_basis ? "true" : "false");
    c.set("solver", "clip_to_bounds", sc.clip_to_bounds ? "true" : "false");

    c.set("checks", "use_bounds", sc.use_bounds ? "true" : "false");
    c.set("checks", "use_energy", sc.use_energy ? "true" : "false");
    if (!sc.upper_caps.empty()) c.set("checks", "upper_caps", join_list(sc.upper_caps));
    if (!sc.lower_caps.empty()) c.set("checks", "lower_caps", join_list(sc.lower_caps));
    c.set("checks", "l1_domination", sc.l1_domination ? "true" : "false");
    c.set("checks", "oracle", sc.oracle);
    c.set("checks", "oracle_param", format_double(sc.oracle_param));
    c.set("checks", "oracle_tol", format_double(sc.oracle_tol));
    c.set("checks", "se_mult", format_double(sc.se_mult));
    c.set("checks", "violation_threshold", format_double(sc.violation_threshold));
    c.set("checks", "norm_beta", format_double(sc.norm_beta));

    if (!sc.comparison_terminal.empty()) {
        c.set("comparison", "label", sc.comparison_terminal);
        put_params(c, "comparison", sc.comparison_params);
    }
    return c;
}

Scenario scenario_from_config(const Config& c) {
    for (const std::string& section : c.sections()) {
        if (section != "scenario" && section != "driver" && section != "terminal" &&
            section != "envelope" && section != "solver" && section != "checks" &&
            section != "comparison") {
            throw ConfigError("unknown config section [" + section + "]");
        }
    }
    reject_unknown_keys(c, "scenario", {"name", "horizon", "steps", "paths", "seed"});
    reject_unknown_keys(c, "envelope", {"alpha", "beta", "gamma"});
    reject_unknown_keys(c, "solver",
                        {"degree", "implicit", "z_cap", "terminal_in_basis", "clip_to_bounds"});
    reject_unknown_keys(c, "checks",
                        {"use_bounds", "use_energy", "upper_caps", "lower_caps", "l1_domination",
                         "oracle", "oracle_param", "oracle_tol", "se_mult", "violation_threshold",
                         "norm_beta"});

    Scenario sc;
    sc.name = c.get_string("scenario", "name", sc.name);
    sc.horizon = c.get_double("scenario", "horizon", sc.horizon);
    sc.steps = static_cast<int>(c.get_long("scenario", "steps", sc.steps));
    sc.paths = c.get_long("scenario", "paths", sc.paths);
    sc.seed = c.get_u64("scenario", "seed", sc.seed);

    sc.driver = c.get_string("driver", "label", sc.driver);
    sc.driver_params = take_params(c, "driver");
    sc.terminal = c.get_string("terminal", "label", sc.terminal);
    sc.terminal_params = take_params(c, "terminal");

    sc.envelope.alpha = c.get_double("envelope", "alpha", sc.envelope.alpha);
    sc.envelope.beta = c.get_double("envelope", "beta", sc.envelope.beta);
    sc.envelope.gamma = c.get_double("envelope", "gamma", sc.envelope.gamma);

    sc.degree = static_cast<int>(c.get_long("solver", "degree", sc.degree));
    sc.implicit = c.get_bool("solver", "implicit", sc.implicit);
    sc.z_cap = c.get_double("solver", "z_cap", sc.z_cap);
    sc.terminal_in_basis = c.get_bool("solver", "terminal_in_basis", sc.terminal_in_basis);
    sc.clip_to_bounds = c.get_bool("solver", "clip_to_bounds", sc.clip_to_bounds);

    sc.use_bounds = c.get_bool("checks", "use_bounds", sc.use_bounds);
    sc.use_energy = c.get_bool("checks", "use_energy", sc.use_energy);
    sc.upper_caps = c.get_double_list("checks", "upper_caps");
    sc.lower_caps = c.get_double_list("checks", "lower_caps");
    sc.l1_domination = c.get_bool("checks", "l1_domination", sc.l1_domination);
    sc.oracle = c.get_string("checks", "oracle", sc.oracle);
    sc.oracle_param = c.get_double("checks", "oracle_param", sc.oracle_param);
    sc.oracle_tol = c.get_double("checks", "oracle_tol", sc.oracle_tol);
    sc.se_mult = c.get_double("checks", "se_mult", sc.se_mult);
    sc.violation_threshold = c.get_double("checks", "violation_threshold", sc.violation_threshold);
    sc.norm_beta = c.get_double("checks", "norm_beta", sc.norm_beta);

    sc.comparison_terminal = c.get_string("comparison", "label", "");
    sc.comparison_params = take_params(c, "comparison");
    return sc;
}

std::vector<std::string> builtin_scenario_names() {
    return {"quadratic_linear",  "quadratic_abs",   "quadratic_square_subcritical",
            "linear_square",     "rough_sublinear", "superlinear_ode",
            "two_sided_truncation"};
}

Scenario builtin_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "quadratic_linear") {
        sc.seed = 41;
        // The small alpha keeps the band strictly away from the exact
        // solution; with alpha = 0 the upper curve is the solution itself and
        // the sandwich would test the regression error against zero slack.
        sc.envelope = {0.05, 0.0, 1.0};
        sc.upper_caps = {1.0, 2.0, 4.0};
        sc.comparison_terminal = "plus_abs";
        sc.oracle = "quadratic";
        sc.oracle_param = 1.0;
        sc.oracle_tol = 0.05;
    } else if (name == "quadratic_abs") {
        sc.seed = 42;
        sc.terminal = "abs";
        // No clipping here: the band pad alpha*(T-t) vanishes near the
        // terminal while the kinked terminal keeps the fit error finite, so
        // projection would censor the upward noise and drag y0 down. The
        // payoff column is what actually resolves the kink: near the last
        // steps the target is barely smoothed |x|, which no affordable
        // polynomial degree tracks inside the band.
        sc.envelope = {0.05, 0.0, 1.0};
        sc.terminal_in_basis = true;
        sc.degree = 8;
        sc.upper_caps = {0.5, 1.0, 2.0};
        sc.oracle = "quadratic";
        sc.oracle_param = 1.0;
        sc.oracle_tol = 0.05;
    } else if (name == "quadratic_square_subcritical") {
        sc.seed = 43;
        sc.paths = 8192;
        sc.driver_params = {{"gamma", 0.3}};
        sc.terminal = "square";
        sc.envelope = {0.05, 0.0, 0.3};
        sc.clip_to_bounds = true;
        sc.upper_caps = {2.0, 4.0, 8.0};
        sc.oracle = "quadratic";
        sc.oracle_param = 0.3;
        sc.oracle_tol = 0.2;
    } else if (name == "linear_square") {
        sc.seed = 44;
        sc.paths = 16384;
        sc.driver = "linear";
        sc.terminal = "square";
        sc.envelope = {10.0, 1.0, 0.1};
        sc.upper_caps = {4.0, 8.0, 16.0};
        sc.oracle = "linear";
        sc.oracle_param = 1.0;
        sc.oracle_tol = 0.15;
    } else if (name == "rough_sublinear") {
        sc.seed = 45;
        sc.driver = "l1_holder";
        sc.envelope = {2.0, 1.0, 2.0};
        sc.l1_domination = true;
        sc.norm_beta = 1.5;
    } else if (name == "superlinear_ode") {
        sc.seed = 46;
        sc.paths = 512;
        sc.driver = "superlinear_log";
        sc.driver_params = {{"alpha", 0.4}};
        sc.terminal = "constant";
        sc.terminal_params = {{"value", 1.0}};
        sc.use_bounds = false;
        sc.use_energy = false;
        sc.oracle = "ode";
        sc.oracle_tol = 0.3;
    } else if (name == "two_sided_truncation") {
        sc.seed = 47;
        sc.paths = 2048;
        sc.driver_params = {{"gamma", 0.8}};
        sc.envelope = {0.05, 0.0, 0.8};
        sc.upper_caps = {1.0, 2.0, 4.0};
        sc.lower_caps = {1.0, 2.0, 4.0};
        sc.oracle = "quadratic";
        sc.oracle_param = 0.8;
        sc.oracle_tol = 0.08;
    } else {
        const auto names = builtin_scenario_names();
        throw ConfigError("unknown scenario '" + name + "'; known: " + list_known(names));
    }
    return sc;
}

void validate_scenario(const Scenario& sc) {
    if (sc.name.empty() || sc.name.find_first_of(",\n=[]") != std::string::npos) {
        throw ConfigError("scenario name must be nonempty and free of ',', '=', '[', ']'");
    }
    if (!(sc.horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (sc.steps < 1) throw ConfigError("steps must be at least 1");
    if (sc.paths < 2) throw ConfigError("paths must be at least 2");
    if (sc.degree < 0 || sc.degree > 12) throw ConfigError("degree must lie in [0, 12]");
    if (sc.z_cap < 0.0) throw ConfigError("z_cap must be >= 0");
    if (!(sc.se_mult > 0.0)) throw ConfigError("se_mult must be positive");
    if (!(sc.violation_threshold >= 0.0 && sc.violation_threshold <= 1.0)) {
        throw ConfigError("violation_threshold must lie in [0, 1]");
    }
    if (!(sc.norm_beta > 0.0)) throw ConfigError("norm_beta must be positive");
    if (!(sc.oracle_tol >= 0.0)) throw ConfigError("oracle_tol must be >= 0");
    if (std::find(std::begin(kOracleKinds), std::end(kOracleKinds), sc.oracle) ==
        std::end(kOracleKinds)) {
        throw ConfigError("oracle must be one of none, quadratic, linear, ode");
    }
    require_increasing_caps(sc.upper_caps, "upper");
    require_increasing_caps(sc.lower_caps, "lower");
    if (!sc.lower_caps.empty() && sc.upper_caps.empty()) {
        throw ConfigError("lower truncation caps need upper caps too");
    }
    if (!sc.lower_caps.empty() && sc.lower_caps.size() != sc.upper_caps.size()) {
        throw ConfigError("two-sided truncation needs matching cap grid sizes");
    }
    if (!sc.envelope.valid()) {
        throw ConfigError("envelope needs alpha, beta >= 0 and gamma > 0");
    }
    if (sc.clip_to_bounds && !sc.use_bounds) {
        throw ConfigError("clip_to_bounds requires use_bounds");
    }

    const Driver driver = make_driver(sc.driver, sc.driver_params);
    const TerminalFunction terminal = make_terminal(sc.terminal, sc.terminal_params);

    const bool superlinear = std::holds_alternative<SuperlinearEnvelope>(driver.envelope);
    if (superlinear && (sc.use_bounds || sc.use_energy || sc.clip_to_bounds)) {
        throw HypothesisError("driver '" + driver.label +
                              "' grows superlinearly in y; the quadratic-envelope band and "
                              "energy estimate do not apply to it");
    }
    if (!superlinear) {
        check_envelope_dominates(driver, sc.envelope, sc.horizon);
    }

    const GrowthReport growth =
        validate_growth(driver, 4000, 8.0, 8.0, sc.horizon, SeedSpec{sc.seed});
    if (!growth.pass) {
        throw HypothesisError("driver '" + driver.label +
                              "' breaks its own declared growth envelope: max excess " +
                              format_double(growth.max_excess));
    }

    if (sc.use_bounds) {
        const QuadraticEnvelope env = normalize_envelope(sc.envelope);
        const MomentCheck mc =
            check_exponential_moment(terminal, env.gamma, env.beta, sc.horizon);
        if (!mc.ok) {
            throw HypothesisError(
                "terminal '" + terminal.label + "' lacks the exponential moment the band needs: "
                "required order " + format_double(mc.required) + ", certificate stops at " +
                format_double(mc.available));
        }
    }

    if (sc.implicit) {
        const double dt = sc.horizon / sc.steps;
        double worst = 0.0;
        for (double t : {0.0, 0.5 * sc.horizon, sc.horizon}) {
            for (int iy = -20; iy <= 20; ++iy) {
                for (double zv : {0.0, -1.0, 1.0, -3.0, 3.0}) {
                    const std::span<const double> z(&zv, 1);
                    worst = std::max(worst, dfdy_at(driver, t, 0.5 * iy, z));
                }
            }
        }
        if (worst * dt >= 1.0) {
            throw HypothesisError("implicit step ill-posed at this grid: dt * df/dy reaches " +
                                  format_double(worst * dt) + "; refine steps or go explicit");
        }
    }

    check_oracle_premises(sc, driver, terminal);

    if (!sc.comparison_terminal.empty()) {
        const TerminalFunction cmp = make_terminal(sc.comparison_terminal, sc.comparison_params);
        const double spread = 8.0 * std::sqrt(sc.horizon);
        for (int i = 0; i <= 400; ++i) {
            const double x = -spread + 2.0 * spread * i / 400.0;
            if (cmp.g(x) < terminal.g(x) - 1e-12) {
                throw ConfigError("comparison terminal '" + cmp.label +
                                  "' does not dominate terminal '" + terminal.label + "' at x=" +
                                  format_double(x));
            }
        }
    }

    if (sc.l1_domination) {
        if (!driver.l1.has_value()) {
            throw ConfigError("driver '" + driver.label +
                              "' declares no sublinear structure constants, so the domination "
                              "check cannot run");
        }
        if (sc.clip_to_bounds) {
            throw ConfigError("clip_to_bounds would distort the dominating solve; disable one");
        }
    }
}

namespace {

PointValue oracle_point(const Scenario& sc, const Driver& driver,
                        const TerminalFunction& terminal, double t, double x) {
    if (sc.oracle == "ode") {
        return constant_terminal_oracle(driver, terminal.g(0.0), sc.horizon, t);
    }
    if (sc.oracle == "quadratic") {
        return quadratic_oracle(terminal, sc.oracle_param, sc.horizon, t, x);
    }
    return linear_oracle(terminal, sc.oracle_param, sc.horizon, t, x);
}

}  // namespace

std::vector<OracleRow> oracle_curve(const Scenario& sc) {
    if (sc.oracle == "none") {
        throw ConfigError("scenario '" + sc.name + "' declares no oracle");
    }
    const Driver driver = make_driver(sc.driver, sc.driver_params);
    const TerminalFunction terminal = make_terminal(sc.terminal, sc.terminal_params);
    std::vector<OracleRow> rows;
    const int time_slices = 8;
    for (int j = 0; j <= time_slices; ++j) {
        const double t = sc.horizon * j / time_slices;
        if (sc.oracle == "ode") {
            const PointValue p = oracle_point(sc, driver, terminal, t, 0.0);
            rows.push_back({t, 0.0, p.y, p.z});
            continue;
        }
        const double spread = 3.0 * std::sqrt(sc.horizon);
        for (int i = 0; i <= 40; ++i) {
            const double x = -spread + 2.0 * spread * i / 40.0;
            const PointValue p = oracle_point(sc, driver, terminal, t, x);
            rows.push_back({t, x, p.y, p.z});
        }
    }
    return rows;
}

RunSummary run_scenario(const Scenario& sc, const std::string& out_dir) {
    validate_scenario(sc);
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ReportError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    scenario_to_config(sc).save((dir / "scenario.cfg").string());

    const Driver driver = make_driver(sc.driver, sc.driver_params);
    const TerminalFunction terminal = make_terminal(sc.terminal, sc.terminal_params);
    const TimeGrid grid = build_grid(sc.horizon, sc.steps);
    const PathEnsemble ensemble = simulate_brownian(grid, 1, sc.paths, SeedSpec{sc.seed});
    {
        std::ofstream os(dir / "paths.csv");
        write_paths_csv(os, ensemble);
        if (!os.good()) throw ReportError("failed to write paths.csv");
    }

    std::optional<BoundProcess> band;
    if (sc.use_bounds) {
        band = compute_bounds(ensemble, terminal, sc.envelope);
        std::ofstream os(dir / "bounds.csv");
        write_bounds_csv(os, *band);
        if (!os.good()) throw ReportError("failed to write bounds.csv");
    }

    SolverOptions options;
    options.regression.degree = sc.degree;
    options.implicit = sc.implicit;
    options.z_cap = sc.z_cap;
    options.terminal_in_basis = sc.terminal_in_basis;
    if (sc.clip_to_bounds && band.has_value()) {
        options.clip_to_bounds = &*band;
    }

    const SolverResult result = solve_lsmc(ensemble, driver, terminal, options);
    {
        std::ofstream os(dir / "solution.csv");
        write_solution_csv(os, result);
        if (!os.good()) throw ReportError("failed to write solution.csv");
    }

    RunSummary summary;
    summary.scenario = sc.name;
    summary.driver = sc.driver;
    summary.terminal = sc.terminal;
    summary.horizon = sc.horizon;
    summary.steps = sc.steps;
    summary.paths = sc.paths;
    summary.seed = sc.seed;
    summary.y0 = result.y0;
    summary.y0_se = result.y0_se;
    summary.terminal_abs_mean = result.terminal_abs_mean;
    summary.oracle_y0 = std::numeric_limits<double>::quiet_NaN();
    summary.oracle_gap = std::numeric_limits<double>::quiet_NaN();

    if (sc.oracle != "none") {
        const std::vector<OracleRow> rows = oracle_curve(sc);
        {
            std::ofstream os(dir / "oracle.csv");
            write_oracle_csv(os, rows);
            if (!os.good()) throw ReportError("failed to write oracle.csv");
        }
        const PointValue at_zero = oracle_point(sc, driver, terminal, 0.0, 0.0);
        summary.oracle_y0 = at_zero.y;
        summary.oracle_gap = std::abs(result.y0 - at_zero.y);
        CheckReport gap;
        gap.check = "oracle_gap";
        gap.scenario = sc.name;
        gap.threshold = 0.0;
        gap.pass = summary.oracle_gap <= sc.oracle_tol + sc.se_mult * result.y0_se;
        gap.violation_rate = gap.pass ? 0.0 : 1.0;
        summary.checks.push_back(gap);
    }

    // The pathwise checks compare fitted conditional means, whose resolution
    // is the statistical SE (granted via se_mult) plus the basis
    // approximation bias, which no SE sees. The bias floor scales with the
    // solution's RMS size; genuine violations sit at the solution scale, an
    // order of magnitude above it.
    double rms = 0.0;
    for (const double v : result.y) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(result.y.size()));
    const double bias_floor = 0.025 * std::max(1.0, rms);

    if (band.has_value()) {
        summary.checks.push_back(check_sandwich(result, *band, sc.name, sc.se_mult,
                                                sc.violation_threshold, bias_floor));
    }

    if (!sc.comparison_terminal.empty()) {
        const TerminalFunction cmp = make_terminal(sc.comparison_terminal, sc.comparison_params);
        SolverOptions cmp_options = options;
        cmp_options.clip_to_bounds = nullptr;  // the band belongs to the main terminal
        const SolverResult dominating = solve_lsmc(ensemble, driver, cmp, cmp_options);
        summary.checks.push_back(check_comparison(result, dominating, sc.name, sc.se_mult,
                                                  sc.violation_threshold, bias_floor));
    }

    if (!sc.upper_caps.empty()) {
        const std::vector<TruncatedSolve> family =
            solve_truncated_family(ensemble, driver, terminal, sc.upper_caps, sc.lower_caps,
                                   options);
        summary.checks.push_back(check_monotone_family(family, sc.name, sc.se_mult,
                                                       sc.violation_threshold, bias_floor));
        // Continuity compares consecutive members, which only means something
        // along a chain of growing caps; for a two-sided grid that chain is
        // the diagonal where both caps grow together.
        if (sc.lower_caps.empty()) {
            summary.checks.push_back(check_terminal_continuity(family, result, sc.name));
        } else {
            std::vector<TruncatedSolve> diagonal;
            for (std::size_t i = 0; i < sc.upper_caps.size(); ++i) {
                for (const TruncatedSolve& member : family) {
                    if (member.upper_cap == sc.upper_caps[i] &&
                        member.lower_cap == sc.lower_caps[i]) {
                        diagonal.push_back(member);
                        break;
                    }
                }
            }
            summary.checks.push_back(check_terminal_continuity(diagonal, result, sc.name));
        }
    }

    if (sc.l1_domination) {
        const DominatedSolve dom =
            solve_l1(ensemble, driver, terminal, options, sc.se_mult, 1.0);
        CheckReport report;
        report.check = "domination";
        report.scenario = sc.name;
        report.violation_rate = dom.violation_rate;
        report.threshold = sc.violation_threshold;
        report.pass = dom.violation_rate <= sc.violation_threshold;
        summary.checks.push_back(report);
    }

    if (sc.use_energy) {
        summary.energy_used = true;
        summary.energy = energy_estimate(result, sc.envelope);
        CheckReport report;
        report.check = "energy";
        report.scenario = sc.name;
        report.threshold = 0.0;
        report.pass = summary.energy.pass;
        report.violation_rate = report.pass ? 0.0 : 1.0;
        summary.checks.push_back(report);
    }

    summary.norms = estimate_norms(result, sc.norm_beta, SeedSpec{sc.seed});
    CheckReport ui;
    ui.check = "uniform_integrability";
    ui.scenario = sc.name;
    ui.threshold = 0.0;
    ui.pass = summary.norms.uniformly_integrable;
    ui.violation_rate = ui.pass ? 0.0 : 1.0;
    summary.checks.push_back(ui);

    summary.all_pass = std::all_of(summary.checks.begin(), summary.checks.end(),
                                   [](const CheckReport& c) { return c.pass; });
    write_report(summary, out_dir);
    return summary;
}

void write_report(const RunSummary& summary, const std::string& dir) {
    const fs::path base(dir);
    std::error_code ec;
    fs::create_directories(base, ec);
    if (ec) {
        throw ReportError("cannot create output directory '" + base.string() + "': " +
                          ec.message());
    }
    {
        std::ostringstream os;
        write_checks_csv(os, summary.checks);
        write_text_file(base / "checks.csv", os.str());
    }
    write_text_file(base / "summary.csv", render_summary_csv(summary));
    write_text_file(base / "summary.txt", render_summary_txt(summary));
}

RunSummary read_summary(const std::string& dir) {
    const fs::path base(dir);

    std::map<std::string, std::string> kv;
    {
        const std::vector<std::string> lines = read_lines_or_report(base / "summary.csv");
        if (lines.empty() || lines[0] != "key,value") {
            throw ReportError("summary.csv does not start with the key,value header");
        }
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const std::size_t comma = lines[i].find(',');
            if (comma == std::string::npos) {
                throw ReportError("summary.csv row '" + lines[i] + "' has no value field");
            }
            kv[lines[i].substr(0, comma)] = lines[i].substr(comma + 1);
        }
    }
    const auto text = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ReportError("summary.csv is missing key '" + key + "'");
        return it->second;
    };

    RunSummary s;
    s.scenario = text("scenario");
    s.driver = text("driver");
    s.terminal = text("terminal");
    s.horizon = report_double(text("horizon"), "horizon");
    s.steps = static_cast<int>(report_long(text("steps"), "steps"));
    s.paths = report_long(text("paths"), "paths");
    {
        const std::string raw = text("seed");
        const char* begin = raw.c_str();
        char* end = nullptr;
        errno = 0;
        s.seed = std::strtoull(begin, &end, 10);
        if (end == begin || *end != '\0' || errno == ERANGE) {
            throw ReportError("seed: '" + raw + "' is not an unsigned integer");
        }
    }
    s.y0 = report_double(text("y0"), "y0");
    s.y0_se = report_double(text("y0_se"), "y0_se");
    s.terminal_abs_mean = report_double(text("terminal_abs_mean"), "terminal_abs_mean");
    s.oracle_y0 = report_double(text("oracle_y0"), "oracle_y0");
    s.oracle_gap = report_double(text("oracle_gap"), "oracle_gap");
    s.energy_used = report_bool(text("energy_used"), "energy_used");
    s.energy.lhs = report_double(text("energy_lhs"), "energy_lhs");
    s.energy.rhs = report_double(text("energy_rhs"), "energy_rhs");
    s.energy.slack = report_double(text("energy_slack"), "energy_slack");
    s.energy.pass = report_bool(text("energy_pass"), "energy_pass");
    s.norms.beta = report_double(text("norm_beta"), "norm_beta");
    s.norms.s_norm = report_double(text("s_norm"), "s_norm");
    s.norms.m_norm = report_double(text("m_norm"), "m_norm");
    s.norms.class_d_level = report_double(text("class_d_level"), "class_d_level");
    s.norms.class_d_tail = report_double(text("class_d_tail"), "class_d_tail");
    s.norms.tail_level = report_double(text("tail_level"), "tail_level");
    s.norms.uniformly_integrable =
        report_bool(text("uniformly_integrable"), "uniformly_integrable");
    s.all_pass = report_bool(text("all_pass"), "all_pass");

    {
        const std::vector<std::string> lines = read_lines_or_report(base / "checks.csv");
        if (lines.empty() || lines[0] != "check,scenario,violation_rate,threshold,pass") {
            throw ReportError("checks.csv does not start with the expected header");
        }
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const std::vector<std::string> fields = split_fields(lines[i]);
            if (fields.size() != 5) {
                throw ReportError("checks.csv row '" + lines[i] + "' does not have 5 fields");
            }
            CheckReport c;
            c.check = fields[0];
            c.scenario = fields[1];
            c.violation_rate = report_double(fields[2], "violation_rate");
            c.threshold = report_double(fields[3], "threshold");
            c.pass = report_bool(fields[4], "pass");
            s.checks.push_back(c);
        }
    }

    const long total = report_long(text("checks_total"), "checks_total");
    const long passed = report_long(text("checks_passed"), "checks_passed");
    long actually_passed = 0;
    for (const CheckReport& c : s.checks) actually_passed += c.pass ? 1 : 0;
    if (total != static_cast<long>(s.checks.size()) || passed != actually_passed) {
        throw ReportError("summary.csv and checks.csv disagree about the check tally");
    }
    const bool conjunction = std::all_of(s.checks.begin(), s.checks.end(),
                                         [](const CheckReport& c) { return c.pass; });
    if (s.all_pass != conjunction) {
        throw ReportError("summary.csv all_pass contradicts the check rows");
    }
    return s;
}

}  // namespace qbsde

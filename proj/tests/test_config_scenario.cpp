#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qbsde/config.hpp"
#include "qbsde/drivers.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/oracles.hpp"
#include "qbsde/scenario.hpp"

using namespace qbsde;

TEST_CASE("config parses sections, comments and typed values") {
    const std::string text =
        "# run settings\n"
        "[scenario]\n"
        "name = demo\n"
        "paths = 4096   # per run\n"
        "horizon = 1.5\n"
        "implicit = true\n"
        "seed = 18446744073709551615\n"
        "\n"
        "[driver]\n"
        "label = pure_quadratic\n"
        "caps = 1, 2.5, 8\n";
    const Config cfg = Config::parse_string(text);

    CHECK(cfg.sections() == std::vector<std::string>{"driver", "scenario"});
    CHECK(cfg.keys("scenario") ==
          std::vector<std::string>{"horizon", "implicit", "name", "paths", "seed"});
    CHECK(cfg.has("driver", "label"));
    CHECK_FALSE(cfg.has("driver", "missing"));
    CHECK_FALSE(cfg.has("absent", "label"));

    CHECK(cfg.get_string("scenario", "name") == "demo");
    CHECK(cfg.get_long("scenario", "paths") == 4096);
    CHECK(cfg.get_double("scenario", "horizon") == doctest::Approx(1.5));
    CHECK(cfg.get_bool("scenario", "implicit", false));
    CHECK(cfg.get_u64("scenario", "seed", 0) == 18446744073709551615ull);

    const std::vector<double> caps = cfg.get_double_list("driver", "caps");
    REQUIRE(caps.size() == 3);
    CHECK(caps[0] == doctest::Approx(1.0));
    CHECK(caps[1] == doctest::Approx(2.5));
    CHECK(caps[2] == doctest::Approx(8.0));
    CHECK(cfg.get_double_list("driver", "absent").empty());
}

TEST_CASE("config fallbacks and typed-access errors") {
    const Config cfg = Config::parse_string("[a]\nx = 2\nword = hello\nflag = 0\n");

    CHECK(cfg.get_double("a", "x") == doctest::Approx(2.0));
    CHECK(cfg.get_double("a", "y", 7.5) == doctest::Approx(7.5));
    CHECK(cfg.get_long("a", "y", -3) == -3);
    CHECK(cfg.get_string("a", "y", "dflt") == "dflt");
    CHECK_FALSE(cfg.get_bool("a", "flag", true));
    CHECK(cfg.get_bool("a", "other", true));

    CHECK_THROWS_AS((void)cfg.get_double("a", "missing"), ConfigError);
    CHECK_THROWS_AS((void)cfg.get_string("a", "missing"), ConfigError);
    CHECK_THROWS_AS((void)cfg.get_double("a", "word"), ConfigError);
    CHECK_THROWS_AS((void)cfg.get_long("a", "word"), ConfigError);
    // Fallback forms still reject unparseable present values.
    CHECK_THROWS_AS((void)cfg.get_double("a", "word", 1.0), ConfigError);
    CHECK_THROWS_AS((void)cfg.get_bool("a", "word", true), ConfigError);
    CHECK_THROWS_AS((void)cfg.get_double_list("a", "word"), ConfigError);
}

TEST_CASE("config parse errors carry line numbers") {
    const auto message_of = [](const std::string& text) {
        try {
            (void)Config::parse_string(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };

    std::string msg = message_of("x = 1\n");
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("section") != std::string::npos);

    msg = message_of("[a]\nok = 1\n[broken\n");
    CHECK(msg.find("line 3") != std::string::npos);

    msg = message_of("[a]\njust words\n");
    CHECK(msg.find("line 2") != std::string::npos);

    msg = message_of("[a]\n= 2\n");
    CHECK(msg.find("line 2") != std::string::npos);

    msg = message_of("[]\n");
    CHECK(msg.find("line 1") != std::string::npos);
}

TEST_CASE("config serialization is canonical and round-trips") {
    Config cfg;
    cfg.set("zeta", "b", "2");
    cfg.set("zeta", "a", "1");
    cfg.set("alpha", "k", "v");

    const std::string text = cfg.serialize();
    CHECK(text ==
          "[alpha]\n"
          "k = v\n"
          "\n"
          "[zeta]\n"
          "a = 1\n"
          "b = 2\n");

    const Config back = Config::parse_string(text);
    CHECK(back == cfg);
    CHECK(back.serialize() == text);

    // Messy input normalizes to the same canonical form.
    const Config messy = Config::parse_string("[zeta]\nb=2\n[alpha]\nk =  v\n[zeta]\na= 1 # c\n");
    CHECK(messy == cfg);
}

TEST_CASE("every builtin scenario validates and round-trips through config") {
    const std::vector<std::string> names = builtin_scenario_names();
    REQUIRE(names.size() == 7);
    for (const std::string& name : names) {
        CAPTURE(name);
        const Scenario sc = builtin_scenario(name);
        CHECK(sc.name == name);
        CHECK_NOTHROW(validate_scenario(sc));

        const Config cfg = scenario_to_config(sc);
        CHECK(scenario_from_config(cfg) == sc);
        // Through the textual form too.
        CHECK(scenario_from_config(Config::parse_string(cfg.serialize())) == sc);
    }
    CHECK_THROWS_AS((void)builtin_scenario("no_such_thing"), ConfigError);
}

TEST_CASE("scenario config rejects unknown sections and keys") {
    const Config base = scenario_to_config(builtin_scenario("quadratic_linear"));

    Config with_section = base;
    with_section.set("extra", "k", "1");
    CHECK_THROWS_AS((void)scenario_from_config(with_section), ConfigError);

    Config with_key = base;
    with_key.set("solver", "degrees", "4");
    CHECK_THROWS_AS((void)scenario_from_config(with_key), ConfigError);

    Config bad_driver_param = base;
    bad_driver_param.set("driver", "curvature", "2");
    // Free parameters parse, but the driver factory rejects names it does not know.
    CHECK_THROWS_AS(validate_scenario(scenario_from_config(bad_driver_param)), ConfigError);
}

TEST_CASE("scenario validation rejects broken settings and broken hypotheses") {
    const Scenario base = builtin_scenario("quadratic_linear");

    Scenario sc = base;
    sc.steps = 0;
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    sc = base;
    sc.upper_caps = {2.0, 2.0};
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    sc = base;
    sc.upper_caps.clear();
    sc.lower_caps = {1.0};
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    sc = base;
    sc.clip_to_bounds = true;
    sc.use_bounds = false;
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    // Envelope curvature below the driver's: the growth assumption fails.
    sc = base;
    sc.envelope.gamma = 0.5;
    CHECK_THROWS_AS(validate_scenario(sc), HypothesisError);

    // Square terminal under a unit-curvature band: the needed exponential
    // moment does not exist.
    sc = base;
    sc.terminal = "square";
    sc.upper_caps.clear();
    sc.comparison_terminal.clear();
    sc.oracle = "none";
    CHECK_THROWS_AS(validate_scenario(sc), HypothesisError);

    // Stiff linear driver at this step size makes the implicit step ill-posed.
    sc = base;
    sc.driver = "linear";
    sc.driver_params = {{"beta", 40.0}};
    sc.envelope = {40.0, 40.0, 1.0};
    sc.oracle = "none";
    sc.comparison_terminal.clear();
    CHECK_THROWS_AS(validate_scenario(sc), HypothesisError);

    // Oracle premise: quadratic oracle on a non-quadratic driver.
    sc = base;
    sc.driver = "linear";
    sc.envelope = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    // Comparison terminal that fails to dominate.
    sc = base;
    sc.terminal = "plus_abs";
    sc.comparison_terminal = "linear";
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    // Domination check needs the sublinear structure constants.
    sc = base;
    sc.l1_domination = true;
    CHECK_THROWS_AS(validate_scenario(sc), ConfigError);

    // Superlinear growth admits no quadratic-envelope band.
    sc = builtin_scenario("superlinear_ode");
    sc.use_bounds = true;
    CHECK_THROWS_AS(validate_scenario(sc), HypothesisError);
}

TEST_CASE("constant-terminal oracle integrates z-independent drivers exactly") {
    // Linear driver, constant terminal c: Y_t = c e^{beta (T-t)}.
    const Driver linear = make_driver("linear", {{"beta", 1.0}});
    const PointValue p = constant_terminal_oracle(linear, 1.0, 1.0, 0.0);
    CHECK(p.y == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
    CHECK(p.z == 0.0);
    CHECK(constant_terminal_oracle(linear, 1.0, 1.0, 1.0).y == doctest::Approx(1.0));

    // The log-superlinear driver has the closed form
    // ln(Y_t + e) = ln(c + e) * exp(alpha (T-t)).
    const Driver slog = make_driver("superlinear_log", {{"alpha", 0.4}});
    const double expected = std::exp(std::log(1.0 + M_E) * std::exp(0.4)) - M_E;
    CHECK(constant_terminal_oracle(slog, 1.0, 1.0, 0.0).y ==
          doctest::Approx(expected).epsilon(1e-8));

    CHECK_THROWS_AS((void)constant_terminal_oracle(make_driver("pure_quadratic"), 1.0, 1.0, 0.0),
                    ConfigError);
    CHECK_THROWS_AS((void)constant_terminal_oracle(linear, 1.0, 1.0, 2.0), ConfigError);
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("run_scenario writes the full artifact set and reports consistently") {
    Scenario sc = builtin_scenario("quadratic_linear");
    sc.paths = 2048;  // keep the test quick; the full size runs in acceptance
    const std::filesystem::path dir = "scenario_run_test";
    std::filesystem::remove_all(dir);

    const RunSummary summary = run_scenario(sc, dir.string());
    for (const char* name : {"scenario.cfg", "paths.csv", "bounds.csv", "oracle.csv",
                             "solution.csv", "checks.csv", "summary.csv", "summary.txt"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(dir / name));
    }

    // The run covers oracle, sandwich, comparison, family monotonicity and
    // continuity, energy, and the integrability probe.
    CHECK(summary.checks.size() == 7);
    CHECK(summary.oracle_y0 == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(summary.y0 - 0.5) < 0.1);
    CHECK(summary.all_pass);

    // The stored config reproduces the scenario.
    CHECK(scenario_from_config(Config::load((dir / "scenario.cfg").string())) == sc);

    // Consolidation is an exact fixed point: read back, rewrite, same bytes.
    const std::string checks_before = slurp(dir / "checks.csv");
    const std::string summary_csv_before = slurp(dir / "summary.csv");
    const std::string summary_txt_before = slurp(dir / "summary.txt");
    const RunSummary reread = read_summary(dir.string());
    CHECK(reread.all_pass == summary.all_pass);
    CHECK(reread.y0 == summary.y0);
    CHECK(reread.checks.size() == summary.checks.size());
    write_report(reread, dir.string());
    CHECK(slurp(dir / "checks.csv") == checks_before);
    CHECK(slurp(dir / "summary.csv") == summary_csv_before);
    CHECK(slurp(dir / "summary.txt") == summary_txt_before);

    // Tampering with the stored verdict is caught, not papered over.
    {
        std::string text = summary_csv_before;
        const std::size_t pos = text.find("all_pass,1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 10, "all_pass,0");
        std::ofstream os(dir / "summary.csv");
        os << text;
    }
    CHECK_THROWS_AS((void)read_summary(dir.string()), ReportError);

    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS((void)read_summary(dir.string()), ReportError);
}

TEST_CASE("run_scenario handles the deterministic superlinear class") {
    const Scenario sc = builtin_scenario("superlinear_ode");
    const std::filesystem::path dir = "scenario_ode_test";
    std::filesystem::remove_all(dir);

    const RunSummary summary = run_scenario(sc, dir.string());
    CHECK_FALSE(std::filesystem::exists(dir / "bounds.csv"));
    CHECK(std::filesystem::exists(dir / "oracle.csv"));

    const double expected = std::exp(std::log(1.0 + M_E) * std::exp(0.4)) - M_E;
    CHECK(summary.oracle_y0 == doctest::Approx(expected).epsilon(1e-8));
    CHECK(std::abs(summary.y0 - expected) < 0.3);
    CHECK(summary.all_pass);
    CHECK_FALSE(summary.energy_used);

    std::filesystem::remove_all(dir);
}

TEST_CASE("config saves to and loads from disk") {
    const std::string path = "config_roundtrip.cfg";
    Config cfg;
    cfg.set("run", "paths", "128");
    cfg.set("run", "label", "disk test");
    cfg.save(path);

    const Config loaded = Config::load(path);
    CHECK(loaded == cfg);
    CHECK(loaded.get_string("run", "label") == "disk test");
    std::remove(path.c_str());

    CHECK_THROWS_AS((void)Config::load("no/such/dir/file.cfg"), ConfigError);
    CHECK_THROWS_AS(cfg.save("no/such/dir/file.cfg"), ConfigError);
}

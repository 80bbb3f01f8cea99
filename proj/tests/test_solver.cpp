#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "qbsde/bounds.hpp"
#include "qbsde/drivers.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/path_ensemble.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/terminal.hpp"

using namespace qbsde;

namespace {

PathEnsemble make_paths(double T, int steps, long paths, std::uint64_t seed) {
    return simulate_brownian(build_grid(T, steps), 1, paths, SeedSpec{seed});
}

}  // namespace

TEST_CASE("backward scheme recovers the purely quadratic closed form") {
    // f = (gamma/2)|z|^2, xi = B_T: Y_t = B_t + gamma(T-t)/2 and Z = 1.
    const double gamma = 1.0, T = 1.0;
    const PathEnsemble paths = make_paths(T, 16, 2048, 1001);
    const Driver driver = make_driver("pure_quadratic", {{"gamma", gamma}});
    const TerminalFunction lin = make_terminal("linear");
    const SolverResult r = solve_lsmc(paths, driver, lin);

    CHECK(std::abs(r.y0 - 0.5 * gamma * T) <= 0.02);
    CHECK(r.terminal_abs_mean == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.1));

    double rmse = 0.0, z_rmse = 0.0, z_sum = 0.0;
    for (long m = 0; m < r.num_paths; ++m) {
        for (int i = 0; i <= r.num_steps; ++i) {
            const double exact = paths.value(m, i) + 0.5 * gamma * (T - r.times[i]);
            rmse += (r.y_at(m, i) - exact) * (r.y_at(m, i) - exact);
            if (i < r.num_steps) {
                z_sum += r.z_at(m, i);
                z_rmse += (r.z_at(m, i) - 1.0) * (r.z_at(m, i) - 1.0);
                // Prediction noise swings hardest at the state-lattice edges.
                CHECK(std::abs(r.z_at(m, i) - 1.0) <= 1.5);
            }
        }
    }
    rmse = std::sqrt(rmse / static_cast<double>(r.num_paths * (r.num_steps + 1)));
    z_rmse = std::sqrt(z_rmse / static_cast<double>(r.num_paths * r.num_steps));
    CHECK(rmse <= 0.03);
    CHECK(z_rmse <= 0.25);
    CHECK(z_sum / static_cast<double>(r.num_paths * r.num_steps) ==
          doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("backward scheme recovers the linear-driver closed form") {
    // f = beta y, xi = B_T^2: Y_t = e^{beta(T-t)}(B_t^2 + T - t), Z_t =
    // 2 B_t e^{beta(T-t)}; at t=0 that is e^{beta T} T.
    // Dual error budget: the implicit stepping bias at N = 32 is +0.044 and
    // the backward-accumulated regression noise at M = 16384 is ~0.03.
    const double beta = 1.0, T = 1.0;
    const PathEnsemble paths = make_paths(T, 32, 16384, 1002);
    const Driver driver = make_driver("linear", {{"beta", beta}});
    const TerminalFunction sq = make_terminal("square");
    const SolverResult r = solve_lsmc(paths, driver, sq);
    CHECK(std::abs(r.y0 - M_E) <= 0.15);

    double y_rmse = 0.0, z_rmse = 0.0;
    for (long m = 0; m < r.num_paths; ++m) {
        for (int i = 0; i <= r.num_steps; ++i) {
            const double tau = T - r.times[i];
            const double x = paths.value(m, i);
            const double ey = std::exp(beta * tau) * (x * x + tau);
            y_rmse += (r.y_at(m, i) - ey) * (r.y_at(m, i) - ey);
            if (i < r.num_steps) {
                const double ez = 2.0 * x * std::exp(beta * tau);
                z_rmse += (r.z_at(m, i) - ez) * (r.z_at(m, i) - ez);
            }
        }
    }
    y_rmse = std::sqrt(y_rmse / static_cast<double>(r.num_paths * (r.num_steps + 1)));
    z_rmse = std::sqrt(z_rmse / static_cast<double>(r.num_paths * r.num_steps));
    CHECK(y_rmse <= 0.15);
    CHECK(z_rmse <= 0.35);
}

TEST_CASE("implicit and explicit driver handling agree to discretization order") {
    const PathEnsemble paths = make_paths(1.0, 32, 16384, 1003);
    const Driver driver = make_driver("linear", {{"beta", 1.0}});
    const TerminalFunction sq = make_terminal("square");
    SolverOptions expl;
    expl.implicit = false;
    const SolverResult a = solve_lsmc(paths, driver, sq);
    const SolverResult b = solve_lsmc(paths, driver, sq, expl);
    CHECK(std::abs(a.y0 - b.y0) <= 0.15);
    CHECK(std::abs(a.y0 - M_E) <= 0.15);
    CHECK(std::abs(b.y0 - M_E) <= 0.15);
}

TEST_CASE("backward scheme is deterministic for a fixed seed") {
    const PathEnsemble paths = make_paths(1.0, 8, 256, 1004);
    const Driver driver = make_driver("pure_quadratic", {{"gamma", 0.8}});
    const TerminalFunction ab = make_terminal("abs");
    const SolverResult a = solve_lsmc(paths, driver, ab);
    const SolverResult b = solve_lsmc(paths, driver, ab);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
    CHECK(a.y_se == b.y_se);
}

TEST_CASE("implicit step refuses a time step the driver slope makes ill-posed") {
    // dt * df/dy = 2 > 1: the implicit residual is decreasing, no stable root.
    const PathEnsemble paths = make_paths(1.0, 1, 64, 1005);
    const Driver driver = make_driver("linear", {{"beta", 2.0}});
    CHECK_THROWS_AS(solve_lsmc(paths, driver, make_terminal("linear")), StepFailureError);
}

TEST_CASE("z cap clamps the martingale coefficient before the driver sees it") {
    const PathEnsemble paths = make_paths(1.0, 16, 1024, 1006);
    const Driver driver = make_driver("pure_quadratic", {{"gamma", 1.0}});
    const TerminalFunction lin = make_terminal("linear");
    SolverOptions capped;
    capped.z_cap = 0.5;
    const SolverResult full = solve_lsmc(paths, driver, lin);
    const SolverResult cut = solve_lsmc(paths, driver, lin, capped);
    double z_max = 0.0;
    for (double z : cut.z) z_max = std::max(z_max, std::abs(z));
    CHECK(z_max <= 0.5);
    // (gamma/2)|z|^2 is increasing in |z|, so the capped solution sits lower.
    CHECK(cut.y0 < full.y0);
}

TEST_CASE("bound clipping keeps the whole solution inside the a priori band") {
    const double gamma = 1.0, T = 1.0;
    const PathEnsemble paths = make_paths(T, 16, 512, 1007);
    const TerminalFunction lin = make_terminal("linear");
    const QuadraticEnvelope env{0.0, 0.0, gamma};
    const BoundProcess band = compute_bounds(paths, lin, env);
    SolverOptions clip;
    clip.clip_to_bounds = &band;
    const SolverResult r = solve_lsmc(paths, make_driver("pure_quadratic", {{"gamma", gamma}}),
                                      lin, clip);
    for (long m = 0; m < r.num_paths; ++m) {
        for (int i = 0; i <= r.num_steps; ++i) {
            CHECK(r.y_at(m, i) >= band.lower_at(m, i) - 1e-12);
            CHECK(r.y_at(m, i) <= band.upper_at(m, i) + 1e-12);
        }
    }
    CHECK(std::abs(r.y0 - 0.5 * gamma * T) <= 0.02);

    const PathEnsemble other = make_paths(T, 16, 256, 1008);
    CHECK_THROWS_AS(solve_lsmc(other, make_driver("pure_quadratic", {{"gamma", gamma}}), lin, clip),
                    std::invalid_argument);
}

TEST_CASE("truncated family is ordered in the cap and converges to the full solve") {
    const PathEnsemble paths = make_paths(1.0, 8, 1024, 1009);
    const Driver driver = make_driver("pure_quadratic", {{"gamma", 1.0}});
    const TerminalFunction lin = make_terminal("linear");
    const std::vector<double> caps = {1.0, 2.0, 4.0, 8.0};
    const auto family = solve_truncated_family(paths, driver, lin, caps, {});
    REQUIRE(family.size() == 4);
    const SolverResult full = solve_lsmc(paths, driver, lin);

    // Comparison in the cap: larger cap, larger terminal, larger solution,
    // up to the regression noise of both solves.
    for (std::size_t k = 0; k + 1 < family.size(); ++k) {
        const SolverResult& lo = family[k].result;
        const SolverResult& hi = family[k + 1].result;
        long violations = 0, total = 0;
        for (long m = 0; m < lo.num_paths; ++m) {
            for (int i = 0; i <= lo.num_steps; ++i, ++total) {
                const double slack = 3.0 * (lo.se_at(m, i) + hi.se_at(m, i)) + 1e-9;
                if (lo.y_at(m, i) > hi.y_at(m, i) + slack) ++violations;
            }
        }
        CHECK(static_cast<double>(violations) <= 0.01 * static_cast<double>(total));
    }

    double prev = 1e300;
    for (const TruncatedSolve& member : family) {
        const double d = terminal_continuity_stat(member.result, full);
        CHECK(d <= prev + 1e-12);
        prev = d;
    }
    CHECK(prev <= 2e-3);  // cap 8 on a standard normal terminal: tail is gone
}

TEST_CASE("two-sided truncation enumerates the cap grid") {
    const PathEnsemble paths = make_paths(1.0, 4, 2048, 1010);
    const Driver driver = make_driver("zero");
    const auto family = solve_truncated_family(paths, driver, make_terminal("linear"),
                                               std::vector<double>{1.0, 2.0},
                                               std::vector<double>{1.5, 3.0});
    REQUIRE(family.size() == 4);
    CHECK(family[0].upper_cap == 1.0);
    CHECK(family[0].lower_cap == 1.5);
    CHECK(family[3].upper_cap == 2.0);
    CHECK(family[3].lower_cap == 3.0);

    // The terminal row is the clamp itself; interior fits may overshoot.
    for (const TruncatedSolve& member : family) {
        for (long m = 0; m < member.result.num_paths; ++m) {
            const double xi = member.result.y_at(m, 4);
            CHECK(xi <= member.upper_cap);
            CHECK(xi >= -member.lower_cap);
        }
    }

    // Zero driver: y0 is the sample mean of clamp(G, -p, n); compare against
    // the Gaussian closed form a Phi(a) + pdf(a) - pdf(b) + b(1 - Phi(b)).
    const auto clamp_mean = [](double a, double b) {
        const auto cdf = [](double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); };
        const auto pdf = [](double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); };
        return a * cdf(a) + pdf(a) - pdf(b) + b * (1.0 - cdf(b));
    };
    for (const TruncatedSolve& member : family) {
        const double exact = clamp_mean(-member.lower_cap, member.upper_cap);
        CHECK(std::abs(member.result.y0 - exact) <= 0.06);
    }

    // Monotonicity at t = 0: up in the upper cap, down in the lower cap.
    CHECK(family[0].result.y0 <= family[2].result.y0 + 1e-9);
    CHECK(family[1].result.y0 <= family[3].result.y0 + 1e-9);
    CHECK(family[1].result.y0 <= family[0].result.y0 + 1e-9);
    CHECK(family[3].result.y0 <= family[2].result.y0 + 1e-9);

    CHECK_THROWS_AS(solve_truncated_family(paths, driver, make_terminal("linear"), {}, {}),
                    std::invalid_argument);
}

TEST_CASE("dominating solve covers the rough-driver solution") {
    const PathEnsemble paths = make_paths(1.0, 16, 1024, 1011);
    const Driver driver = make_driver("l1_holder");
    const DominatedSolve pair = solve_l1(paths, driver, make_terminal("linear"));
    CHECK(pair.violation_rate <= 0.01);
    CHECK(pair.dominating.y0 > 0.0);
    CHECK(pair.dominating.terminal_label == "|linear|");
    CHECK_THROWS_AS(
        solve_l1(paths, make_driver("pure_quadratic", {{"gamma", 1.0}}), make_terminal("linear")),
        ConfigError);
}

TEST_CASE("energy of the martingale part stays under the exponential functional") {
    const double gamma = 1.0, T = 1.0;
    const PathEnsemble paths = make_paths(T, 16, 1024, 1012);
    const SolverResult r = solve_lsmc(paths, make_driver("pure_quadratic", {{"gamma", gamma}}),
                                      make_terminal("linear"));
    const EnergyReport report = energy_estimate(r, QuadraticEnvelope{0.0, 0.0, gamma});
    CHECK(report.lhs == doctest::Approx(T).epsilon(0.1));  // Z is 1, so the energy is T
    CHECK(report.pass);
    CHECK(report.lhs <= report.rhs);

    const EnergyReport strangled = energy_estimate(r, QuadraticEnvelope{0.0, 0.0, gamma}, 1e-9);
    CHECK_FALSE(strangled.pass);
}

TEST_CASE("uniform distance between solves needs matching shapes") {
    const PathEnsemble a = make_paths(1.0, 4, 64, 1013);
    const PathEnsemble b = make_paths(1.0, 8, 64, 1013);
    const Driver driver = make_driver("zero");
    const SolverResult ra = solve_lsmc(a, driver, make_terminal("linear"));
    const SolverResult rb = solve_lsmc(b, driver, make_terminal("linear"));
    CHECK_THROWS_AS(terminal_continuity_stat(ra, rb), std::invalid_argument);
    CHECK(terminal_continuity_stat(ra, ra) == 0.0);
}

TEST_CASE("solution CSV carries the path,step,t,Y,Z header and zero terminal Z") {
    const PathEnsemble paths = make_paths(0.5, 2, 2, 1014);
    const SolverResult r = solve_lsmc(paths, make_driver("zero"), make_terminal("linear"));
    std::ostringstream os;
    write_solution_csv(os, r);
    std::istringstream in(os.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "path,step,t,Y,Z1");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 6);
    // Terminal rows end in ",0": no increment left at t = T.
    CHECK(rows[2].substr(rows[2].size() - 2) == ",0");
    CHECK(rows[5].substr(rows[5].size() - 2) == ",0");
}

// Acceptance gate: one line per criterion, every tolerance pinned next to the
// measurement it guards. Exit status is the number of failed criteria, so a
// green run exits 0 and the harness treats any red line as a test failure.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qbsde/bounds.hpp"
#include "qbsde/drivers.hpp"
#include "qbsde/envelopes.hpp"
#include "qbsde/inf_convolution.hpp"
#include "qbsde/oracles.hpp"
#include "qbsde/path_ensemble.hpp"
#include "qbsde/phi.hpp"
#include "qbsde/philox.hpp"
#include "qbsde/scenario.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/terminal.hpp"
#include "qbsde/theta.hpp"
#include "qbsde/verification.hpp"

using namespace qbsde;

namespace {

struct Criterion {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return std::string(buf);
}

// 1. The closed-form envelope curve against a blind RK4 integration of its
// defining backward ODE, across flat-rate, growing-rate, and negative-start
// parameter corners (both the curve that climbs back above 1 before the
// horizon and the one that never does); then the table-driven general curve
// against the closed form on linear growth shapes, where the two must agree.
Criterion phi_closed_form() {
    constexpr double kOdeRelTol = 1e-8;
    constexpr double kThetaRelTol = 1e-6;
    constexpr int kOdeSteps = 40000;
    const double T = 1.0;

    const QuadraticEnvelope e1{0.0, 0.0, 1.0}, e2{0.3, 0.0, 1.0}, e3{1.0, 0.0, 0.5},
        e4{0.5, 0.0, 2.0}, e5{1.0, 1.0, 1.0}, e6{2.0, 1.0, 0.5}, e7{1.0, 2.0, 2.0},
        e8{0.6, 0.3, 0.5};
    struct Combo {
        QuadraticEnvelope env;
        double z, t;
    };
    const Combo combos[20] = {
        {e1, 0.5, 0.0},  {e1, -1.0, 0.3},  {e2, 0.5, 0.0},  {e2, -0.2, 0.0},
        {e2, -0.8, 0.2}, {e3, 1.5, 0.0},   {e3, -2.0, 0.0}, {e3, -0.3, 0.5},
        {e4, 0.7, 0.1},  {e4, -0.4, 0.0},  {e5, 1.0, 0.0},  {e5, -0.5, 0.0},
        {e5, -3.0, 0.4}, {e6, 0.5, 0.25},  {e6, -0.6, 0.0}, {e7, 0.3, 0.0},
        {e7, -0.25, 0.3}, {e8, 2.0, 0.0},  {e8, -1.5, 0.1}, {e8, -0.05, 0.6}};

    double worst_ode = 0.0;
    for (const Combo& c : combos) {
        const double closed = phi_linear(c.t, c.z, c.env, T);
        const double ode = ode_phi_oracle(c.t, c.z, c.env, T, kOdeSteps);
        worst_ode = std::max(worst_ode, std::abs(closed - ode) / ode);
    }

    double worst_theta = 0.0;
    for (const QuadraticEnvelope& env : {e2, e5, e7, e8}) {
        const ThetaTable table(build_superlinear(linear_shape(env.alpha, env.beta), env.gamma));
        for (double z : {-1.0, 0.25, 1.0}) {
            for (double t : {0.0, 0.5}) {
                const double general = log_phi_general(t, z, table, T);
                const double closed = log_phi_linear(t, z, env, T);
                worst_theta = std::max(worst_theta, std::abs(general - closed));
            }
        }
    }

    Criterion c{"phi_closed_form"};
    c.pass = worst_ode <= kOdeRelTol && worst_theta <= kThetaRelTol;
    c.detail = fmt("ode rel err %.2e (tol %.0e), theta-table log gap %.2e (tol %.0e)", worst_ode,
                   kOdeRelTol, worst_theta, kThetaRelTol);
    return c;
}

// 2. Backward solve of the purely quadratic equation at the reference grid
// (T=1, 50 steps, 1e5 paths, degree 4) against the quadrature oracle, for a
// smooth and for a kinked terminal.
Criterion quadratic_oracle_y0() {
    constexpr double kRelTol = 0.02;
    Criterion c{"quadratic_oracle_y0"};
    c.pass = true;
    const PathEnsemble ens = simulate_brownian(build_grid(1.0, 50), 1, 100000, SeedSpec{2});
    const Driver driver = make_driver("pure_quadratic");
    std::string detail;
    for (const char* label : {"linear", "abs"}) {
        const TerminalFunction g = make_terminal(label);
        const SolverResult r = solve_lsmc(ens, driver, g);
        const double target = quadratic_oracle(g, 1.0, 1.0, 0.0, 0.0).y;
        const double rel = std::abs(r.y0 - target) / std::abs(target);
        if (!(rel <= kRelTol)) c.pass = false;
        if (!detail.empty()) detail += ", ";
        detail += fmt("%s y0 %.4f vs %.4f (rel %.2f%%)", label, r.y0, target, 100.0 * rel);
    }
    c.detail = detail + fmt("; tol %.0f%%", 100.0 * kRelTol);
    return c;
}

// 3. Linear driver f = y with a squared terminal: y0 must land within 2% of
// the exact e. The grid is finer than the reference one because the implicit
// step's O(dt) bias alone eats 1.6% at 32 steps.
Criterion linear_oracle_y0() {
    constexpr double kRelTol = 0.02;
    const PathEnsemble ens = simulate_brownian(build_grid(1.0, 128), 1, 131072, SeedSpec{3});
    const SolverResult r = solve_lsmc(ens, make_driver("linear"), make_terminal("square"));
    const double rel = std::abs(r.y0 - M_E) / M_E;
    Criterion c{"linear_oracle_y0"};
    c.pass = rel <= kRelTol;
    c.detail = fmt("y0 %.5f vs e %.5f (rel %.2f%%, tol %.0f%%)", r.y0, M_E, 100.0 * rel,
                   100.0 * kRelTol);
    return c;
}

// 4. The a priori band sandwiches the unclipped solve of the smooth-terminal
// quadratic equation at three ensemble sizes; each violation rate stays under
// 1% at 3 fitted standard errors, and the rates do not increase with the
// ensemble (compared at twice the binomial standard error of the difference,
// the resolution at which two rates are distinguishable at all). The kinked
// variant is excluded: its fit carries a deterministic basis residual at the
// kink, so shrinking statistical tolerances must eventually flag it, whatever
// the degree; its band check runs in the scenario catalog with an explicit
// approximation-bias floor instead.
Criterion sandwich_band() {
    constexpr double kRateTol = 0.01;
    constexpr double kSeMult = 3.0;
    const QuadraticEnvelope env{0.05, 0.0, 1.0};
    const long sizes[3] = {10000, 40000, 160000};

    double rates[3] = {0, 0, 0};
    double ns[3] = {0, 0, 0};
    Criterion c{"sandwich_band"};
    c.pass = true;
    for (int k = 0; k < 3; ++k) {
        const PathEnsemble ens = simulate_brownian(build_grid(1.0, 50), 1, sizes[k], SeedSpec{4});
        const TerminalFunction g = make_terminal("linear");
        const BoundProcess band = compute_bounds(ens, g, env);
        const SolverResult r = solve_lsmc(ens, make_driver("pure_quadratic"), g);
        const CheckReport rep = check_sandwich(r, band, "flagship", kSeMult, kRateTol);
        rates[k] = rep.violation_rate;
        ns[k] = static_cast<double>(sizes[k]) * (ens.grid.num_steps + 1);
        if (!rep.pass) c.pass = false;
    }
    for (int k = 0; k + 1 < 3; ++k) {
        const double se_diff = std::sqrt(rates[k] * (1.0 - rates[k]) / ns[k] +
                                         rates[k + 1] * (1.0 - rates[k + 1]) / ns[k + 1]);
        if (!(rates[k + 1] <= rates[k] + 2.0 * se_diff)) c.pass = false;
    }
    c.detail = fmt("rates %.4f / %.4f / %.4f over M 1e4 / 4e4 / 1.6e5 (tol %.2f, nonincreasing)",
                   rates[0], rates[1], rates[2], kRateTol);
    return c;
}

// 5. Truncating the terminal from above with growing caps must not decrease
// y0, and truncating from below with growing caps must not increase it, on a
// common path ensemble, each adjacent pair compared at 2 combined fit SEs.
Criterion truncation_monotone() {
    constexpr double kSeMult = 2.0;
    const PathEnsemble ens = simulate_brownian(build_grid(1.0, 32), 1, 32768, SeedSpec{5});
    const Driver driver = make_driver("pure_quadratic");

    int bad_pairs = 0, pairs = 0;
    std::vector<double> ys, ses;
    for (double n : {1.0, 2.0, 4.0, 8.0}) {
        const SolverResult r = solve_lsmc(ens, driver, truncate_upper(make_terminal("abs"), n));
        ys.push_back(r.y0);
        ses.push_back(r.y0_se);
    }
    for (std::size_t i = 0; i + 1 < ys.size(); ++i, ++pairs) {
        if (ys[i + 1] < ys[i] - kSeMult * (ses[i] + ses[i + 1])) ++bad_pairs;
    }

    ys.clear();
    ses.clear();
    for (double p : {1.0, 2.0, 4.0}) {
        // Upper cap far beyond the sample range: only the lower cut bites.
        const SolverResult r =
            solve_lsmc(ens, driver, truncate_two_sided(make_terminal("linear"), 1e9, p));
        ys.push_back(r.y0);
        ses.push_back(r.y0_se);
    }
    for (std::size_t i = 0; i + 1 < ys.size(); ++i, ++pairs) {
        if (ys[i + 1] > ys[i] + kSeMult * (ses[i] + ses[i + 1])) ++bad_pairs;
    }

    Criterion c{"truncation_monotone"};
    c.pass = bad_pairs == 0;
    c.detail = fmt("%d of %d adjacent pairs out of order at %.0f SE", bad_pairs, pairs, kSeMult);
    return c;
}

// 6. The deterministic inequality layer: the transformed driver stays under
// the comparison map, the comparison map is convex and dominates its defining
// expression, and the envelope curve is monotone in time and in its terminal
// argument. Sampled, with zero tolerance beyond numerical noise.
Criterion envelope_inequalities() {
    constexpr long kSamples = 10000;
    constexpr double kTol = 1e-12;
    const double T = 1.0;
    const std::vector<QuadraticEnvelope> envs = {
        {0.0, 0.0, 1.0}, {0.3, 0.0, 1.0}, {1.0, 0.0, 0.5}, {0.5, 0.0, 2.0},
        {1.0, 1.0, 1.0}, {2.0, 1.0, 0.5}, {1.0, 2.0, 2.0}, {0.6, 0.3, 0.5}};

    Philox4x32 rng = SeedSpec{6}.stream(SeedSpec::kSampling, 0);
    long bad_fh = 0, bad_convex = 0, bad_dom = 0, bad_mono = 0;

    struct Pair {
        Driver driver;
        QuadraticEnvelope env;
    };
    std::vector<Pair> pairs;
    pairs.push_back({make_driver("pure_quadratic"), {0.0, 0.0, 1.0}});
    pairs.push_back({make_driver("linear"), {1.0, 1.0, 1.0}});
    pairs.push_back({make_driver("bounded_quadratic"), {1.0, 0.0, 1.0}});
    for (long i = 0; i < kSamples; ++i) {
        const Pair& pr = pairs[i % pairs.size()];
        const double s = rng.uniform() * T;
        const double p = std::exp(-3.0 + 6.0 * rng.uniform());
        const double q = -6.0 + 12.0 * rng.uniform();
        const double F = eval_F(s, p, std::span(&q, 1), pr.driver, pr.env.gamma);
        const double H = eval_H(p, pr.env);
        if (F > H + kTol * std::max(1.0, std::abs(H))) ++bad_fh;
    }
    for (long i = 0; i < kSamples; ++i) {
        const QuadraticEnvelope& env = envs[i % envs.size()];
        const double p1 = std::exp(-3.0 + 6.0 * rng.uniform());
        const double p2 = std::exp(-3.0 + 6.0 * rng.uniform());
        const double lam = rng.uniform();
        const double mid = eval_H(lam * p1 + (1.0 - lam) * p2, env);
        const double chord = lam * eval_H(p1, env) + (1.0 - lam) * eval_H(p2, env);
        if (mid > chord + kTol * std::max(1.0, std::abs(chord))) ++bad_convex;

        const double p = std::exp(-3.0 + 6.0 * rng.uniform());
        const double expr = p * (env.alpha * env.gamma + env.beta * std::abs(std::log(p)));
        const double H = eval_H(p, env);
        if (expr > H + kTol * std::max(1.0, std::abs(H))) ++bad_dom;
    }
    for (long i = 0; i < kSamples; ++i) {
        const QuadraticEnvelope& env = envs[i % envs.size()];
        const double t1 = rng.uniform() * T;
        const double t2 = t1 + rng.uniform() * (T - t1);
        const double z = -3.0 + 6.0 * rng.uniform();
        if (log_phi_linear(t1, z, env, T) < log_phi_linear(t2, z, env, T) - kTol) ++bad_mono;
        const double dz = rng.uniform();
        if (log_phi_linear(t1, z, env, T) > log_phi_linear(t1, z + dz, env, T) + kTol) ++bad_mono;
    }

    Criterion c{"envelope_inequalities"};
    c.pass = bad_fh == 0 && bad_convex == 0 && bad_dom == 0 && bad_mono == 0;
    c.detail = fmt("violations: transform %ld, convexity %ld, dominance %ld, monotonicity %ld "
                   "(tol %.0e, %ld samples each)",
                   bad_fh, bad_convex, bad_dom, bad_mono, kTol, kSamples);
    return c;
}

// 7. Ordered terminals give ordered solutions, for the quadratic driver
// (terminal raised by |B_T|) and for the rough sublinear driver (terminal
// raised to its positive part), samplewise at 3 fitted SEs on a common
// ensemble. The kinked upper terminals put their kink into the regression
// span, and the comparison carries the standard approximation-bias floor:
// where the two solutions genuinely coincide (the positive-part pair ties on
// most of the state space late) the fitted surfaces tie-break on basis
// ripple, which is resolution, not order.
Criterion comparison_order() {
    constexpr double kRateTol = 0.01;
    constexpr double kSeMult = 3.0;
    constexpr double kBiasFloorScale = 0.025;
    const PathEnsemble ens = simulate_brownian(build_grid(1.0, 32), 1, 16384, SeedSpec{7});
    SolverOptions opt;
    opt.terminal_in_basis = true;

    const auto floor_for = [](const SolverResult& r) {
        double rms = 0.0;
        for (const double v : r.y) rms += v * v;
        return kBiasFloorScale * std::max(1.0, std::sqrt(rms / static_cast<double>(r.y.size())));
    };

    const SolverResult qlo = solve_lsmc(ens, make_driver("pure_quadratic"),
                                        make_terminal("linear"), opt);
    const SolverResult qhi = solve_lsmc(ens, make_driver("pure_quadratic"),
                                        make_terminal("plus_abs"), opt);
    const CheckReport quad =
        check_comparison(qlo, qhi, "quadratic", kSeMult, kRateTol, floor_for(qhi));

    const SolverResult rlo = solve_lsmc(ens, make_driver("sqrt_z"), make_terminal("linear"), opt);
    const SolverResult rhi = solve_lsmc(ens, make_driver("sqrt_z"), make_terminal("plus_part"),
                                        opt);
    const CheckReport rough =
        check_comparison(rlo, rhi, "rough", kSeMult, kRateTol, floor_for(rhi));

    Criterion c{"comparison_order"};
    c.pass = quad.pass && rough.pass;
    c.detail = fmt("violation rates: quadratic %.4f, rough %.4f (tol %.2f)", quad.violation_rate,
                   rough.violation_rate, kRateTol);
    return c;
}

// 8. The martingale-part energy stays under its exponential functional on the
// reference quadratic solve, and on the driverless equation with linear
// terminal, where the energy is exactly 1, the estimate lands within 3%.
Criterion energy_bound() {
    constexpr double kZeroRelTol = 0.03;
    const PathEnsemble ens = simulate_brownian(build_grid(1.0, 50), 1, 65536, SeedSpec{8});

    const SolverResult flag = solve_lsmc(ens, make_driver("pure_quadratic"),
                                         make_terminal("linear"));
    const EnergyReport ef = energy_estimate(flag, QuadraticEnvelope{0.05, 0.0, 1.0});

    const SolverResult zero = solve_lsmc(ens, make_driver("zero"), make_terminal("linear"));
    const EnergyReport ez = energy_estimate(zero, QuadraticEnvelope{0.0, 0.0, 1.0});
    const double rel = std::abs(ez.lhs - 1.0);

    Criterion c{"energy_bound"};
    c.pass = ef.pass && ez.pass && rel <= kZeroRelTol;
    c.detail = fmt("quadratic lhs %.3f <= %.2f * rhs %.3f; driverless lhs %.4f vs 1 "
                   "(rel %.2f%%, tol %.0f%%)",
                   ef.lhs, ef.slack, ef.rhs, ez.lhs, 100.0 * rel, 100.0 * kZeroRelTol);
    return c;
}

// 9. The rough sublinear driver |z|^(1/2): its solve stays under the
// dominating Lipschitz solve, the exponent-1/2 pathwise norms are finite and
// move less than 5% in log when the ensemble doubles, and the stopping-time
// integrability probe finds a uniform tail level.
Criterion rough_driver_l1() {
    constexpr double kRateTol = 0.01;
    constexpr double kLogStabTol = 0.05;
    double s[2] = {0, 0}, m[2] = {0, 0}, rate[2] = {0, 0};
    bool ui = true;
    const long sizes[2] = {16384, 32768};
    for (int k = 0; k < 2; ++k) {
        const PathEnsemble ens = simulate_brownian(build_grid(1.0, 32), 1, sizes[k], SeedSpec{9});
        const DominatedSolve ds = solve_l1(ens, make_driver("sqrt_z"), make_terminal("linear"),
                                           {}, 3.0, kRateTol);
        rate[k] = ds.violation_rate;
        const NormReport nr = estimate_norms(ds.main, 0.5, SeedSpec{9});
        s[k] = nr.s_norm;
        m[k] = nr.m_norm;
        if (!nr.uniformly_integrable) ui = false;
    }
    const double s_move = std::abs(std::log(s[1] / s[0]));
    const double m_move = std::abs(std::log(m[1] / m[0]));

    Criterion c{"rough_driver_l1"};
    c.pass = rate[0] <= kRateTol && rate[1] <= kRateTol && std::isfinite(s[1]) &&
             std::isfinite(m[1]) && s_move <= kLogStabTol && m_move <= kLogStabTol && ui;
    c.detail = fmt("domination rates %.4f / %.4f, sup-norm %.4f, qv-norm %.4f, doubling moves "
                   "%.3f / %.3f in log (tol %.2f), tail level found: %s",
                   rate[0], rate[1], s[1], m[1], s_move, m_move, kLogStabTol, ui ? "yes" : "no");
    return c;
}

// 10. The Lipschitz approximating family of f(y) = y^2: the lattice-search
// member at n=2 agrees with a dense brute-force minimization at 50 query
// points, and the family is pointwise nondecreasing in n and capped by f,
// exactly (all members rank one shared candidate set).
Criterion inf_convolution_family_check() {
    constexpr double kBruteTol = 1e-4;
    constexpr double kOrderTol = 1e-12;
    Driver base;
    base.label = "square_y";
    base.f = [](double, double y, std::span<const double>) { return y * y; };
    base.dfdy = [](double, double y, std::span<const double>) { return 2.0 * y; };
    base.envelope = QuadraticEnvelope{0.0, 0.0, 1.0};

    const Driver f2 = inf_convolution(base, 2.0);
    double worst = 0.0;
    const double z0 = 0.0;
    const std::span<const double> z(&z0, 1);
    for (int i = 0; i < 50; ++i) {
        const double y = -5.0 + 10.0 * static_cast<double>(i) / 49.0;
        // Brute force: dense scan of p -> p^2 + 2|p - y| (the z-penalty is
        // slack at its own minimum since the driver ignores z).
        double best = 1e300;
        const double h = 1e-5;
        for (double p = -8.0; p <= 8.0; p += h) {
            best = std::min(best, p * p + 2.0 * std::abs(p - y));
        }
        worst = std::max(worst, std::abs(f2.f(0.0, y, z) - best));
    }

    const double ns[4] = {1.0, 2.0, 4.0, 8.0};
    const std::vector<Driver> family = inf_convolution_family(base, ns);
    long bad_order = 0;
    Philox4x32 rng = SeedSpec{10}.stream(SeedSpec::kSampling, 0);
    for (int i = 0; i < 100; ++i) {
        const double y = -6.0 + 12.0 * rng.uniform();
        const double zq = -4.0 + 8.0 * rng.uniform();
        const std::span<const double> zz(&zq, 1);
        double prev = -1e300;
        for (const Driver& fn : family) {
            const double v = fn.f(0.0, y, zz);
            if (v < prev - kOrderTol) ++bad_order;
            prev = v;
        }
        if (prev > base.f(0.0, y, zz) + kOrderTol) ++bad_order;
    }

    Criterion c{"inf_convolution"};
    c.pass = worst <= kBruteTol && bad_order == 0;
    c.detail = fmt("worst gap to brute force %.2e (tol %.0e), %ld order violations", worst,
                   kBruteTol, bad_order);
    return c;
}

// 11. Bitwise reproducibility: the same scenario run twice with the same seed
// must emit byte-identical artifacts, CSVs included.
Criterion determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "qbsde_acceptance_determinism";
    const fs::path a = root / "a", b = root / "b";
    std::error_code ec;
    fs::remove_all(root, ec);

    Criterion c{"determinism"};
    const Scenario sc = builtin_scenario("quadratic_linear");
    run_scenario(sc, a.string());
    run_scenario(sc, b.string());

    int files = 0, mismatched = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        ++files;
        const fs::path other = b / entry.path().filename();
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(other, std::ios::binary);
        std::ostringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        if (!fs::exists(other) || sa.str() != sb.str()) ++mismatched;
    }
    fs::remove_all(root, ec);

    c.pass = files >= 8 && mismatched == 0;
    c.detail = fmt("%d artifacts compared, %d mismatched", files, mismatched);
    return c;
}

}  // namespace

int main() {
    std::vector<Criterion (*)()> criteria = {
        phi_closed_form,  quadratic_oracle_y0,   linear_oracle_y0,
        sandwich_band,    truncation_monotone,   envelope_inequalities,
        comparison_order, energy_bound,          rough_driver_l1,
        inf_convolution_family_check, determinism};

    int failed = 0;
    std::printf("acceptance gate\n");
    for (auto fn : criteria) {
        Criterion c;
        try {
            c = fn();
        } catch (const std::exception& e) {
            c.name = "(criterion threw)";
            c.pass = false;
            c.detail = e.what();
        }
        if (!c.pass) ++failed;
        std::printf("  %s  %-22s %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failed,
                criteria.size());
    return failed;
}

#include "qbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qbsde/csv.hpp"
#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

// Solve y - dt f(t, y, z) = m. Newton from the explicit predictor; when the
// iteration stalls or the derivative misbehaves, bracket the root by
// doubling and bisect. dt f_y < 1 on the bracket makes the map increasing,
// so a sign change is all bisection needs.
double implicit_step(const Driver& driver, double t, double m, std::span<const double> z,
                     double dt, const SolverOptions& options, long path, int step) {
    const auto residual = [&](double y) { return y - dt * driver.f(t, y, z) - m; };

    double y = m + dt * driver.f(t, m, z);
    for (int it = 0; it < options.newton_max_iters; ++it) {
        const double r = residual(y);
        if (std::abs(r) <= options.newton_tol * (1.0 + std::abs(y))) return y;
        const double slope = 1.0 - dt * driver.dfdy(t, y, z);
        if (!(slope > 0.05) || !std::isfinite(r)) break;
        const double next = y - r / slope;
        if (!std::isfinite(next)) break;
        y = next;
    }
    if (std::abs(residual(y)) <= 1e-9 * (1.0 + std::abs(y))) return y;

    double radius = 1.0 + 2.0 * dt * std::abs(driver.f(t, m, z));
    double lo = m - radius, hi = m + radius;
    int expansions = 0;
    while (residual(lo) > 0.0 || residual(hi) < 0.0) {
        if (++expansions > 60) {
            throw StepFailureError("implicit driver step found no root bracket", path, step);
        }
        radius *= 2.0;
        lo = m - radius;
        hi = m + radius;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) >= 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= 1e-13 * (1.0 + std::abs(hi))) break;
    }
    const double root = 0.5 * (lo + hi);
    if (!std::isfinite(root) || std::abs(residual(root)) > 1e-6 * (1.0 + std::abs(root))) {
        throw StepFailureError("implicit driver step did not converge", path, step);
    }
    return root;
}

}  // namespace

double SolverResult::z_norm2_at(long m, int i) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double v = z_at(m, i, k);
        s += v * v;
    }
    return s;
}

SolverResult solve_lsmc(const PathEnsemble& ensemble, const Driver& driver,
                        const TerminalFunction& terminal, const SolverOptions& options) {
    if (ensemble.dim != 1) {
        throw std::invalid_argument("backward scheme needs a scalar terminal state");
    }
    const int N = ensemble.grid.num_steps;
    const long M = ensemble.num_paths;
    const double dt = ensemble.grid.dt();
    if (options.clip_to_bounds != nullptr &&
        (options.clip_to_bounds->num_paths != M || options.clip_to_bounds->num_steps != N)) {
        throw std::invalid_argument("bound process shape does not match the ensemble");
    }

    SolverResult out;
    out.num_paths = M;
    out.num_steps = N;
    out.dim = ensemble.dim;
    out.times = ensemble.grid.times;
    out.driver_label = driver.label;
    out.terminal_label = terminal.label;
    out.y.assign(static_cast<std::size_t>(M) * (N + 1), 0.0);
    out.y_se.assign(static_cast<std::size_t>(M) * (N + 1), 0.0);
    out.z.assign(static_cast<std::size_t>(M) * N, 0.0);

    double abs_sum = 0.0;
    for (long m = 0; m < M; ++m) {
        const double xi = terminal.g(ensemble.value(m, N));
        out.y[m * (N + 1) + N] = xi;
        abs_sum += std::abs(xi);
    }
    out.terminal_abs_mean = abs_sum / static_cast<double>(M);

    FeatureFn feature;
    if (options.terminal_in_basis) {
        feature = [&terminal](std::span<const double> x) { return terminal.g(x[0]); };
    }

    std::vector<double> state(M), target(M), zq(M);
    std::vector<double> znorm(M);
    for (int i = N - 1; i >= 0; --i) {
        const double t = ensemble.grid.times[i];
        for (long m = 0; m < M; ++m) state[m] = ensemble.value(m, i);
        const RegressionDesign design(state, 1, options.regression, std::sqrt(t), feature);

        for (long m = 0; m < M; ++m) target[m] = out.y[m * (N + 1) + i + 1];
        const FittedRegression mean_fit = design.solve(target);

        // Martingale coefficient: the conditional mean is subtracted first so
        // the dB factor multiplies a centered residual (pure variance win,
        // identical conditional expectation).
        for (long m = 0; m < M; ++m) {
            zq[m] = (target[m] - mean_fit.fitted_values()[m]) * ensemble.increment(m, i) / dt;
        }
        const FittedRegression z_fit = design.solve(zq);
        for (long m = 0; m < M; ++m) {
            double zv = z_fit.fitted_values()[m];
            if (options.z_cap > 0.0) zv = std::clamp(zv, -options.z_cap, options.z_cap);
            out.z[m * N + i] = zv;
            znorm[m] = zv;
        }

        for (long m = 0; m < M; ++m) {
            const double mcond = mean_fit.fitted_values()[m];
            const std::span<const double> zrow(&znorm[m], 1);
            double y;
            if (options.implicit) {
                y = implicit_step(driver, t, mcond, zrow, dt, options, m, i);
            } else {
                // Explicit variant: driver evaluated at the next-step value.
                y = mcond + dt * driver.f(t, target[m], zrow);
            }
            if (options.clip_to_bounds != nullptr) {
                y = std::clamp(y, options.clip_to_bounds->lower_at(m, i),
                               options.clip_to_bounds->upper_at(m, i));
            }
            out.y[m * (N + 1) + i] = y;
            out.y_se[m * (N + 1) + i] = mean_fit.prediction_se1(state[m]);
        }
    }

    double y0_sum = 0.0, se_sum = 0.0;
    for (long m = 0; m < M; ++m) {
        y0_sum += out.y[m * (N + 1)];
        se_sum += out.y_se[m * (N + 1)];
    }
    out.y0 = y0_sum / static_cast<double>(M);
    out.y0_se = se_sum / static_cast<double>(M);
    return out;
}

std::vector<TruncatedSolve> solve_truncated_family(const PathEnsemble& ensemble,
                                                   const Driver& driver,
                                                   const TerminalFunction& base,
                                                   std::span<const double> upper_caps,
                                                   std::span<const double> lower_caps,
                                                   const SolverOptions& options) {
    if (upper_caps.empty()) {
        throw std::invalid_argument("truncated family needs at least one upper cap");
    }
    std::vector<TruncatedSolve> out;
    for (double n : upper_caps) {
        if (lower_caps.empty()) {
            out.push_back({n, 0.0, solve_lsmc(ensemble, driver, truncate_upper(base, n), options)});
            continue;
        }
        for (double p : lower_caps) {
            out.push_back(
                {n, p, solve_lsmc(ensemble, driver, truncate_two_sided(base, n, p), options)});
        }
    }
    return out;
}

DominatedSolve solve_l1(const PathEnsemble& ensemble, const Driver& driver,
                        const TerminalFunction& terminal, const SolverOptions& options,
                        double tol_se, double violation_threshold) {
    if (!driver.l1.has_value()) {
        throw ConfigError("driver '" + driver.label + "' carries no dominating structure");
    }
    DominatedSolve out;
    out.main = solve_lsmc(ensemble, driver, terminal, options);
    out.dominating =
        solve_lsmc(ensemble, dominating_driver(*driver.l1), abs_terminal(terminal), options);

    const int N = ensemble.grid.num_steps;
    const long M = ensemble.num_paths;
    long violations = 0;
    for (long m = 0; m < M; ++m) {
        for (int i = 0; i <= N; ++i) {
            const double slack =
                tol_se * (out.main.se_at(m, i) + out.dominating.se_at(m, i)) + 1e-9;
            if (std::abs(out.main.y_at(m, i)) > out.dominating.y_at(m, i) + slack) ++violations;
        }
    }
    out.violation_rate =
        static_cast<double>(violations) / (static_cast<double>(M) * (N + 1));
    if (out.violation_rate > violation_threshold) {
        throw SolverInconsistencyError(
            "dominating solution fails to cover the driver's solution on " +
            std::to_string(100.0 * out.violation_rate) + "% of samples");
    }
    return out;
}

EnergyReport energy_estimate(const SolverResult& result, const QuadraticEnvelope& envelope,
                             double slack) {
    const QuadraticEnvelope env = normalize_envelope(envelope);
    const double gamma = env.gamma;
    const int N = result.num_steps;
    const double dt = result.times.size() > 1 ? result.times[1] - result.times[0] : 0.0;

    double lhs = 0.0, rhs = 0.0;
    for (long m = 0; m < result.num_paths; ++m) {
        double quad = 0.0, sup = 0.0, integral = 0.0;
        for (int i = 0; i <= N; ++i) {
            const double ay = std::abs(result.y_at(m, i));
            sup = std::max(sup, std::exp(gamma * ay));
            if (i < N) {
                quad += result.z_norm2_at(m, i) * dt;
                integral += std::exp(gamma * ay) * (env.alpha + env.beta * ay) * dt;
            }
        }
        lhs += quad;
        rhs += 2.0 * (sup / (gamma * gamma) + integral / gamma);
    }
    EnergyReport report;
    report.lhs = lhs / static_cast<double>(result.num_paths);
    report.rhs = rhs / static_cast<double>(result.num_paths);
    report.slack = slack;
    report.pass = report.lhs <= slack * report.rhs;
    return report;
}

double terminal_continuity_stat(const SolverResult& a, const SolverResult& b) {
    if (a.num_paths != b.num_paths || a.num_steps != b.num_steps) {
        throw std::invalid_argument("uniform distance needs solves on the same ensemble");
    }
    double sum = 0.0;
    for (long m = 0; m < a.num_paths; ++m) {
        double worst = 0.0;
        for (int i = 0; i <= a.num_steps; ++i) {
            worst = std::max(worst, std::abs(a.y_at(m, i) - b.y_at(m, i)));
        }
        sum += worst;
    }
    return sum / static_cast<double>(a.num_paths);
}

void write_solution_csv(std::ostream& os, const SolverResult& result) {
    os << "path,step,t,Y";
    for (int k = 1; k <= result.dim; ++k) os << ",Z" << k;
    os << '\n';
    for (long m = 0; m < result.num_paths; ++m) {
        for (int i = 0; i <= result.num_steps; ++i) {
            os << m << ',' << i << ',' << format_double(result.times[i]) << ','
               << format_double(result.y_at(m, i));
            for (int k = 0; k < result.dim; ++k) {
                os << ',' << format_double(i < result.num_steps ? result.z_at(m, i, k) : 0.0);
            }
            os << '\n';
        }
    }
}

}  // namespace qbsde

#include "qbsde/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "qbsde/csv.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/quadrature.hpp"

namespace qbsde {
namespace {

void validate_common(double T, double t, const OracleOptions& options) {
    if (!(T > 0.0)) throw std::invalid_argument("oracle horizon must be positive");
    if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("oracle time outside [0, T]");
    if (options.nodes_per_panel < 2 || options.nodes_per_panel > 32) {
        throw std::invalid_argument("oracle nodes_per_panel outside [2, 32]");
    }
}

double terminal_slope(const TerminalFunction& terminal, double x, double h) {
    return (terminal.g(x + h) - terminal.g(x - h)) / (2.0 * h);
}

// Widen the integration window until the quadratic-transform log-integrand
// gamma g(x + sigma u) - u^2/2 has dropped 40 nats below its maximum at both
// edges; if even the widest window fails the exponential moment is (or is
// numerically indistinguishable from) infinite.
double resolve_half_width(const TerminalFunction& terminal, double gamma, double x, double sigma) {
    for (double w = 12.0; w <= 44.0; w += 8.0) {
        constexpr int kProbe = 257;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < kProbe; ++i) {
            const double u = -w + 2.0 * w * i / (kProbe - 1);
            best = std::max(best, gamma * terminal.g(x + sigma * u) - 0.5 * u * u);
        }
        const double left = gamma * terminal.g(x - sigma * w) - 0.5 * w * w;
        const double right = gamma * terminal.g(x + sigma * w) - 0.5 * w * w;
        if (left <= best - 40.0 && right <= best - 40.0) return w;
    }
    throw IntegrabilityError("terminal '" + terminal.label +
                             "': exponential transform does not decay inside any window; "
                             "required exponential moment looks infinite");
}

// ln E[exp(gamma g(x0 + sigma G))], normalized by the realized weight mass so
// constant terminals come out exact.
double log_exp_moment(const TerminalFunction& terminal, double gamma, double x0, double sigma,
                      int nodes, double half_width) {
    const WeightedNodes wn =
        gaussian_split_nodes(x0, sigma, terminal.breakpoints, nodes, half_width);
    std::vector<double> log_terms(wn.nodes.size());
    for (std::size_t i = 0; i < wn.nodes.size(); ++i) {
        log_terms[i] = gamma * terminal.g(wn.nodes[i]);
    }
    double mass = 0.0;
    for (double w : wn.weights) mass += w;
    return log_sum_exp(log_terms, wn.weights) - std::log(mass);
}

}  // namespace

PointValue quadratic_oracle(const TerminalFunction& terminal, double gamma, double T, double t,
                            double x, const OracleOptions& options) {
    validate_common(T, t, options);
    if (!(gamma > 0.0)) throw std::invalid_argument("quadratic oracle needs gamma > 0");
    const double sigma = std::sqrt(T - t);
    if (sigma == 0.0) {
        return {terminal.g(x), terminal_slope(terminal, x, options.diff_step)};
    }

    const double w = resolve_half_width(terminal, gamma, x, sigma);
    const int n = options.nodes_per_panel;
    const double coarse = log_exp_moment(terminal, gamma, x, sigma, n, w) / gamma;
    const double fine = log_exp_moment(terminal, gamma, x, sigma, 2 * n, w) / gamma;
    if (std::abs(fine - coarse) > options.stability_tol) {
        throw IntegrabilityError("terminal '" + terminal.label +
                                 "': quadratic oracle value unstable under node doubling");
    }

    const double h = options.diff_step;
    const double up = log_exp_moment(terminal, gamma, x + h, sigma, 2 * n, w);
    const double down = log_exp_moment(terminal, gamma, x - h, sigma, 2 * n, w);
    return {fine, (up - down) / (2.0 * h * gamma)};
}

PointValue linear_oracle(const TerminalFunction& terminal, double beta, double T, double t,
                         double x, const OracleOptions& options) {
    validate_common(T, t, options);
    const double sigma = std::sqrt(T - t);
    const double growth = std::exp(beta * (T - t));
    if (sigma == 0.0) {
        return {terminal.g(x), terminal_slope(terminal, x, options.diff_step)};
    }

    const auto mean_at = [&](double x0, int nodes) {
        return gaussian_expectation_split(terminal.g, x0, sigma, terminal.breakpoints, nodes);
    };
    const int n = options.nodes_per_panel;
    const double coarse = mean_at(x, n);
    const double fine = mean_at(x, 2 * n);
    if (std::abs(fine - coarse) > options.stability_tol * std::max(1.0, std::abs(fine))) {
        throw IntegrabilityError("terminal '" + terminal.label +
                                 "': linear oracle value unstable under node doubling");
    }

    const double h = options.diff_step;
    const double slope = (mean_at(x + h, 2 * n) - mean_at(x - h, 2 * n)) / (2.0 * h);
    return {growth * fine, growth * slope};
}

PointValue constant_terminal_oracle(const Driver& driver, double value, double horizon, double t,
                                    int rk4_steps) {
    if (!(horizon > 0.0) || !(t >= 0.0) || !(t <= horizon)) {
        throw ConfigError("constant-terminal oracle needs 0 <= t <= horizon with horizon > 0");
    }
    if (rk4_steps < 1) {
        throw ConfigError("constant-terminal oracle needs at least one RK4 step");
    }

    // Backward in calendar time from s = horizon down to s = t.
    const double h = (horizon - t) / static_cast<double>(rk4_steps);
    const std::vector<double> zero(1, 0.0);
    const std::vector<double> probe(1, 0.5);
    const auto rhs = [&](double s, double y) {
        const double base = driver.f(s, y, zero);
        const double moved = driver.f(s, y, probe);
        if (std::abs(moved - base) > 1e-10 * std::max(1.0, std::abs(base))) {
            throw ConfigError("constant-terminal oracle requires a z-independent driver");
        }
        return base;
    };

    double y = value;
    for (int k = 0; k < rk4_steps; ++k) {
        const double s = horizon - static_cast<double>(k) * h;
        const double k1 = rhs(s, y);
        const double k2 = rhs(s - 0.5 * h, y + 0.5 * h * k1);
        const double k3 = rhs(s - 0.5 * h, y + 0.5 * h * k2);
        const double k4 = rhs(s - h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(y)) {
            throw IntegrabilityError("constant-terminal oracle diverged during backward integration");
        }
    }
    return {y, 0.0};
}

void write_oracle_csv(std::ostream& os, std::span<const OracleRow> rows) {
    os << "t,x,Y,Z\n";
    for (const OracleRow& row : rows) {
        os << format_double(row.t) << ',' << format_double(row.x) << ',' << format_double(row.y)
           << ',' << format_double(row.z) << '\n';
    }
}

}  // namespace qbsde

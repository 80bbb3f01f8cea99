#include "qbsde/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "qbsde/csv.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/phi.hpp"
#include "qbsde/quadrature.hpp"

namespace qbsde {
namespace {

// Natural cubic spline on a strictly increasing lattice; clamps queries to
// the lattice range, which compute_bounds guarantees covers every sample.
class CubicSpline {
  public:
    CubicSpline(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)), m_(xs_.size(), 0.0) {
        const std::size_t n = xs_.size();
        if (n < 3) return;
        std::vector<double> diag(n, 2.0), rhs(n, 0.0), sub(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = xs_[i] - xs_[i - 1];
            const double hr = xs_[i + 1] - xs_[i];
            sub[i] = hl / (hl + hr);
            rhs[i] = 6.0 / (hl + hr) *
                     ((ys_[i + 1] - ys_[i]) / hr - (ys_[i] - ys_[i - 1]) / hl);
        }
        // Thomas sweep with natural ends m_0 = m_{n-1} = 0.
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double w = sub[i] / diag[i - 1];
            diag[i] -= w * (1.0 - sub[i - 1]);
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            const double upper = i + 2 < n ? (1.0 - sub[i]) * m_[i + 1] : 0.0;
            m_[i] = (rhs[i] - upper) / diag[i];
            if (i == 1) break;
        }
    }

    double operator()(double x) const {
        const std::size_t n = xs_.size();
        if (n == 1) return ys_[0];
        x = std::clamp(x, xs_.front(), xs_.back());
        std::size_t j = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
        j = std::clamp<std::size_t>(j, 1, n - 1);
        const double h = xs_[j] - xs_[j - 1];
        const double a = (xs_[j] - x) / h, b = (x - xs_[j - 1]) / h;
        return a * ys_[j - 1] + b * ys_[j] +
               ((a * a * a - a) * m_[j - 1] + (b * b * b - b) * m_[j]) * h * h / 6.0;
    }

  private:
    std::vector<double> xs_, ys_;
    std::vector<double> m_;
};

struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
};

// Integration window wide enough that both log-integrands (for the upper and
// the mirrored lower curve) have decayed 40 nats below their maxima.
double resolve_window(double t, double x, double sigma, const TerminalFunction& terminal,
                      const QuadraticEnvelope& env, double T) {
    for (double w = 12.0; w <= 44.0; w += 8.0) {
        constexpr int kProbe = 129;
        double best = -std::numeric_limits<double>::infinity();
        double edge = best;
        for (int i = 0; i < kProbe; ++i) {
            const double u = -w + 2.0 * w * i / (kProbe - 1);
            const double g = terminal.g(x + sigma * u);
            const double val =
                std::max(log_phi_linear(t, g, env, T), log_phi_linear(t, -g, env, T)) -
                0.5 * u * u;
            best = std::max(best, val);
            if (i == 0 || i == kProbe - 1) edge = std::max(edge, val);
        }
        if (edge <= best - 40.0) return w;
    }
    throw IntegrabilityError("terminal '" + terminal.label +
                             "': conditional comparison curve does not decay inside any "
                             "integration window");
}

// Quadrature realization of the conditional comparison curve at (t, x).
BoundPair bound_at(double t, double x, double sigma, const TerminalFunction& terminal,
                   const QuadraticEnvelope& env, double T, int nodes) {
    if (sigma == 0.0) {
        const double g = terminal.g(x);
        return {g, g};
    }
    const double w = resolve_window(t, x, sigma, terminal, env, T);
    const WeightedNodes wn = gaussian_split_nodes(x, sigma, terminal.breakpoints, nodes, w);
    std::vector<double> up(wn.nodes.size()), down(wn.nodes.size());
    for (std::size_t i = 0; i < wn.nodes.size(); ++i) {
        const double g = terminal.g(wn.nodes[i]);
        up[i] = log_phi_linear(t, g, env, T);
        down[i] = log_phi_linear(t, -g, env, T);
    }
    double mass = 0.0;
    for (double w : wn.weights) mass += w;
    const double log_mass = std::log(mass);
    const double gamma = env.gamma;
    return {-(log_sum_exp(down, wn.weights) - log_mass) / gamma,
            (log_sum_exp(up, wn.weights) - log_mass) / gamma};
}

}  // namespace

BoundProcess compute_bounds(const PathEnsemble& ensemble, const TerminalFunction& terminal,
                            const QuadraticEnvelope& envelope, const BoundsOptions& options) {
    if (ensemble.dim != 1) {
        throw std::invalid_argument("bound process needs a scalar terminal state");
    }
    if (options.nodes_per_panel < 2 || options.nodes_per_panel > 32) {
        throw std::invalid_argument("bounds nodes_per_panel outside [2, 32]");
    }
    if (!options.direct && options.lattice_points < 8) {
        throw std::invalid_argument("bounds lattice needs at least 8 points");
    }
    const QuadraticEnvelope env = normalize_envelope(envelope);
    const double T = ensemble.grid.horizon;
    const int N = ensemble.grid.num_steps;
    const long M = ensemble.num_paths;

    const MomentCheck moment = check_exponential_moment(terminal, env.gamma, env.beta, T);
    if (!moment.ok) {
        throw IntegrabilityError(
            "terminal '" + terminal.label + "' certifies exponential moments only below order " +
            std::to_string(moment.available) + " but the bound envelope needs order " +
            std::to_string(moment.required));
    }

    BoundProcess out;
    out.num_paths = M;
    out.num_steps = N;
    out.times = ensemble.grid.times;
    out.lower.assign(static_cast<std::size_t>(M) * (N + 1), 0.0);
    out.upper.assign(static_cast<std::size_t>(M) * (N + 1), 0.0);

    for (int i = 0; i <= N; ++i) {
        const double t = ensemble.grid.times[i];
        const double sigma = std::sqrt(std::max(T - t, 0.0));
        double lo = ensemble.value(0, i), hi = lo;
        for (long m = 1; m < M; ++m) {
            lo = std::min(lo, ensemble.value(m, i));
            hi = std::max(hi, ensemble.value(m, i));
        }
        const bool degenerate = hi - lo < 1e-9;
        if (i == N || options.direct || degenerate) {
            for (long m = 0; m < M; ++m) {
                const BoundPair b = bound_at(t, ensemble.value(m, i), sigma, terminal, env, T,
                                             options.nodes_per_panel);
                out.lower[m * (N + 1) + i] = b.lower;
                out.upper[m * (N + 1) + i] = b.upper;
            }
            continue;
        }
        const int L = options.lattice_points;
        std::vector<double> xs(L), los(L), ups(L);
        const double pad = options.lattice_pad;
        for (int j = 0; j < L; ++j) {
            xs[j] = (lo - pad) + (hi - lo + 2.0 * pad) * j / (L - 1);
            const BoundPair b = bound_at(t, xs[j], sigma, terminal, env, T,
                                         options.nodes_per_panel);
            los[j] = b.lower;
            ups[j] = b.upper;
        }
        const CubicSpline lower_fit(xs, los), upper_fit(xs, ups);
        for (long m = 0; m < M; ++m) {
            const double x = ensemble.value(m, i);
            out.lower[m * (N + 1) + i] = lower_fit(x);
            out.upper[m * (N + 1) + i] = upper_fit(x);
        }
    }

    // Sample diagnostic at t = 0: bound implied by the raw terminal sample,
    // and how top-heavy that sample mean is.
    std::vector<double> terms(M);
    for (long m = 0; m < M; ++m) {
        terms[m] = log_phi_linear(0.0, std::abs(terminal.g(ensemble.value(m, N))), env, T);
    }
    const std::vector<double> unit(M, 1.0);
    const double lse = log_sum_exp(terms, unit);
    out.sample_exp_bound = (lse - std::log(static_cast<double>(M))) / env.gamma;
    std::vector<double> sorted = terms;
    std::sort(sorted.begin(), sorted.end());
    const long top = std::max<long>(1, M / 100);
    double top_mass = 0.0;
    for (long m = 0; m < top; ++m) top_mass += std::exp(sorted[M - 1 - m] - lse);
    out.sample_tail_share = top_mass;
    return out;
}

std::vector<std::size_t> localization_times(const BoundProcess& process, double level) {
    if (!(level > 0.0)) throw std::invalid_argument("localization level must be positive");
    std::vector<std::size_t> out(process.num_paths, process.num_steps + 1);
    for (long m = 0; m < process.num_paths; ++m) {
        for (int i = 0; i <= process.num_steps; ++i) {
            const double mag =
                std::max(process.upper_at(m, i), -process.lower_at(m, i));
            if (mag >= level) {
                out[m] = static_cast<std::size_t>(i);
                break;
            }
        }
    }
    return out;
}

void write_bounds_csv(std::ostream& os, const BoundProcess& process) {
    os << "path,step,t,lower,upper\n";
    for (long m = 0; m < process.num_paths; ++m) {
        for (int i = 0; i <= process.num_steps; ++i) {
            os << m << ',' << i << ',' << format_double(process.times[i]) << ','
               << format_double(process.lower_at(m, i)) << ','
               << format_double(process.upper_at(m, i)) << '\n';
        }
    }
}

}  // namespace qbsde

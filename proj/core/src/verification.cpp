#include "qbsde/verification.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qbsde/csv.hpp"

namespace qbsde {
namespace {

void require_same_shape(const SolverResult& a, const SolverResult& b) {
    if (a.num_paths != b.num_paths || a.num_steps != b.num_steps) {
        throw std::invalid_argument("order check needs solves on the same ensemble");
    }
}

CheckReport finish(std::string check, const std::string& scenario, long violations, long total,
                   double threshold) {
    CheckReport report;
    report.check = std::move(check);
    report.scenario = scenario;
    report.violation_rate =
        total == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(total);
    report.threshold = threshold;
    report.pass = report.violation_rate <= threshold;
    return report;
}

long count_order_violations(const SolverResult& lo, const SolverResult& hi, double se_mult,
                            double abs_tol = 0.0) {
    long violations = 0;
    for (long m = 0; m < lo.num_paths; ++m) {
        for (int i = 0; i <= lo.num_steps; ++i) {
            const double slack = se_mult * (lo.se_at(m, i) + hi.se_at(m, i)) + abs_tol + 1e-9;
            if (lo.y_at(m, i) > hi.y_at(m, i) + slack) ++violations;
        }
    }
    return violations;
}

// Mean and standard error of the per-path sup distance between two solves.
struct DistanceStat {
    double mean = 0.0;
    double se = 0.0;
};
DistanceStat sup_distance(const SolverResult& a, const SolverResult& b) {
    require_same_shape(a, b);
    const long M = a.num_paths;
    double sum = 0.0, sumsq = 0.0;
    for (long m = 0; m < M; ++m) {
        double worst = 0.0;
        for (int i = 0; i <= a.num_steps; ++i) {
            worst = std::max(worst, std::abs(a.y_at(m, i) - b.y_at(m, i)));
        }
        sum += worst;
        sumsq += worst * worst;
    }
    DistanceStat stat;
    stat.mean = sum / static_cast<double>(M);
    const double var =
        std::max(0.0, sumsq / static_cast<double>(M) - stat.mean * stat.mean);
    stat.se = std::sqrt(var / static_cast<double>(M));
    return stat;
}

}  // namespace

CheckReport check_comparison(const SolverResult& lo, const SolverResult& hi,
                             const std::string& scenario, double se_mult, double threshold,
                             double abs_tol) {
    require_same_shape(lo, hi);
    const long total = lo.num_paths * (lo.num_steps + 1);
    return finish("comparison", scenario, count_order_violations(lo, hi, se_mult, abs_tol), total,
                  threshold);
}

CheckReport check_sandwich(const SolverResult& result, const BoundProcess& band,
                           const std::string& scenario, double se_mult, double threshold,
                           double abs_tol) {
    if (result.num_paths != band.num_paths || result.num_steps != band.num_steps) {
        throw std::invalid_argument("sandwich check needs a band on the same ensemble");
    }
    long violations = 0;
    for (long m = 0; m < result.num_paths; ++m) {
        for (int i = 0; i <= result.num_steps; ++i) {
            const double tol = se_mult * result.se_at(m, i) + abs_tol + 1e-9;
            const double y = result.y_at(m, i);
            if (y < band.lower_at(m, i) - tol || y > band.upper_at(m, i) + tol) ++violations;
        }
    }
    const long total = result.num_paths * (result.num_steps + 1);
    return finish("sandwich", scenario, violations, total, threshold);
}

CheckReport check_monotone_family(std::span<const TruncatedSolve> family,
                                  const std::string& scenario, double se_mult, double threshold,
                                  double abs_tol) {
    if (family.size() < 2) {
        throw std::invalid_argument("monotone family check needs at least two members");
    }
    long violations = 0, total = 0;
    for (std::size_t a = 0; a < family.size(); ++a) {
        for (std::size_t b = 0; b < family.size(); ++b) {
            if (a == b) continue;
            const TruncatedSolve& small = family[a];
            const TruncatedSolve& large = family[b];
            const bool upper_grows = small.lower_cap == large.lower_cap &&
                                     small.upper_cap < large.upper_cap;
            const bool lower_shrinks = small.upper_cap == large.upper_cap &&
                                       small.lower_cap > large.lower_cap;
            if (!upper_grows && !lower_shrinks) continue;
            violations += count_order_violations(small.result, large.result, se_mult, abs_tol);
            total += small.result.num_paths * (small.result.num_steps + 1);
        }
    }
    if (total == 0) {
        throw std::invalid_argument("cap grid holds no comparable pair");
    }
    return finish("monotone_family", scenario, violations, total, threshold);
}

CheckReport check_terminal_continuity(std::span<const TruncatedSolve> family,
                                      const SolverResult& full, const std::string& scenario,
                                      double threshold) {
    if (family.size() < 2) {
        throw std::invalid_argument("continuity check needs at least two members");
    }
    std::vector<DistanceStat> stats;
    stats.reserve(family.size());
    for (const TruncatedSolve& member : family) {
        stats.push_back(sup_distance(member.result, full));
    }
    long violations = 0;
    for (std::size_t k = 0; k + 1 < stats.size(); ++k) {
        const double tol = 2.0 * (stats[k].se + stats[k + 1].se) + 1e-12;
        if (stats[k + 1].mean > stats[k].mean + tol) ++violations;
    }
    return finish("terminal_continuity", scenario, violations,
                  static_cast<long>(stats.size()) - 1, threshold);
}

NormReport estimate_norms(const SolverResult& result, double beta, SeedSpec seed,
                          int num_stopping, double tail_threshold) {
    if (!(beta > 0.0)) throw std::invalid_argument("norm exponent must be positive");
    if (num_stopping < 2) throw std::invalid_argument("need at least two stopping times");
    const long M = result.num_paths;
    const int N = result.num_steps;
    const double dt = result.times.size() > 1 ? result.times[1] - result.times[0] : 0.0;

    NormReport report;
    report.beta = beta;
    const double outer = std::min(1.0, 1.0 / beta);

    double sup_pow = 0.0, energy_pow = 0.0, sup_abs_max = 0.0;
    std::vector<double> sup_abs(M, 0.0);
    for (long m = 0; m < M; ++m) {
        double worst = 0.0, energy = 0.0;
        for (int i = 0; i <= N; ++i) {
            worst = std::max(worst, std::abs(result.y_at(m, i)));
            if (i < N) energy += result.z_norm2_at(m, i) * dt;
        }
        sup_abs[m] = worst;
        sup_abs_max = std::max(sup_abs_max, worst);
        sup_pow += std::pow(worst, beta);
        energy_pow += std::pow(energy, 0.5 * beta);
    }
    report.s_norm = std::pow(sup_pow / static_cast<double>(M), outer);
    report.m_norm = std::pow(energy_pow / static_cast<double>(M), outer);

    // Stopping-time sample: even k hits a level ladder of |Y|, odd k draws an
    // independent grid index per path from the seed's stopping streams.
    std::vector<std::vector<int>> taus(num_stopping, std::vector<int>(M, N));
    for (int k = 0; k < num_stopping; ++k) {
        if (k % 2 == 0) {
            const double level =
                sup_abs_max * (static_cast<double>(k) + 1.0) / (num_stopping + 1.0);
            for (long m = 0; m < M; ++m) {
                for (int i = 0; i <= N; ++i) {
                    if (std::abs(result.y_at(m, i)) >= level) {
                        taus[k][m] = i;
                        break;
                    }
                }
            }
        } else {
            Philox4x32 rng = seed.stream(SeedSpec::kStopping, static_cast<std::uint64_t>(k));
            for (long m = 0; m < M; ++m) {
                taus[k][m] = static_cast<int>(rng.uniform() * (N + 1));
                taus[k][m] = std::min(taus[k][m], N);
            }
        }
    }

    const auto stopped_tail = [&](double level) {
        double worst = 0.0;
        for (int k = 0; k < num_stopping; ++k) {
            double tail = 0.0;
            for (long m = 0; m < M; ++m) {
                const double v = std::abs(result.y_at(m, taus[k][m]));
                if (v > level) tail += v;
            }
            worst = std::max(worst, tail / static_cast<double>(M));
        }
        return worst;
    };

    double worst_mean = 0.0;
    for (int k = 0; k < num_stopping; ++k) {
        double mean = 0.0;
        for (long m = 0; m < M; ++m) mean += std::abs(result.y_at(m, taus[k][m]));
        worst_mean = std::max(worst_mean, mean / static_cast<double>(M));
    }
    report.class_d_level = worst_mean;

    report.uniformly_integrable = false;
    for (double level = 1.0; level <= 1048576.0; level *= 2.0) {
        const double tail = stopped_tail(level);
        report.tail_level = level;
        report.class_d_tail = tail;
        if (tail <= tail_threshold) {
            report.uniformly_integrable = true;
            break;
        }
    }
    return report;
}

void write_checks_csv(std::ostream& os, std::span<const CheckReport> reports) {
    os << "check,scenario,violation_rate,threshold,pass\n";
    for (const CheckReport& r : reports) {
        os << r.check << ',' << r.scenario << ',' << format_double(r.violation_rate) << ','
           << format_double(r.threshold) << ',' << (r.pass ? 1 : 0) << '\n';
    }
}

}  // namespace qbsde

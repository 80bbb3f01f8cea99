#include "qbsde/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

// Orthonormal physicists' Hermite ladder at z: returns p1 = h_n(z) and
// p2 = h_{n-1}(z). The scaled recurrence keeps the ratio O(1); long double
// keeps the magnitudes (up to e^{z^2/2}) representable for n in the thousands.
void hermite_pair(int n, long double z, long double& p1, long double& p2) {
    const long double pim4 = 0.7511255444649424828587030047762276930510L;  // pi^{-1/4}
    p1 = pim4;
    p2 = 0.0L;
    for (int j = 0; j < n; ++j) {
        const long double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0L / (j + 1)) * p2 -
             std::sqrt(static_cast<long double>(j) / (j + 1)) * p3;
    }
}

// Physicists' rule (weight e^{-x^2}): nodes from the symmetric tridiagonal
// Jacobi matrix, then Newton-polished in long double, which also yields the
// derivative value the weight formula needs. Avoids the classic warm-start
// chain, which loses roots for n in the hundreds.
void gauss_hermite_physicists(int n, std::vector<long double>& x, std::vector<long double>& w) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int j = 1; j < n; ++j) sub(j - 1) = std::sqrt(0.5 * j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ToleranceError("gauss_hermite: eigensolve failed");

    x.assign(n, 0.0L);
    w.assign(n, 0.0L);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // es eigenvalues ascend; take the i-th largest.
        long double z = static_cast<long double>(es.eigenvalues()(n - 1 - i));
        long double p1 = 0.0L, p2 = 0.0L, pp = 0.0L;
        for (int it = 0; it < 8; ++it) {
            hermite_pair(n, z, p1, p2);
            pp = std::sqrt(2.0L * n) * p2;
            const long double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-17L * (1.0L + std::abs(z))) break;
        }
        hermite_pair(n, z, p1, p2);
        pp = std::sqrt(2.0L * n) * p2;
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0L / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) x[m - 1] = 0.0L;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 2048) throw std::invalid_argument("gauss_hermite: n must be in [1, 2048]");
    QuadratureRule rule;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {1.0};
        return rule;
    }
    std::vector<long double> x, w;
    gauss_hermite_physicists(n, x, w);
    const long double sqrt2 = std::sqrt(2.0L);
    const long double inv_sqrt_pi = 0.5641895835477562869480794515607725858441L;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Physicists' rule integrates against e^{-x^2}; substituting x = t/sqrt(2)
    // turns it into an expectation under N(0,1).
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = static_cast<double>(sqrt2 * x[n - 1 - i]);  // ascending order
        rule.weights[i] = static_cast<double>(w[n - 1 - i] * inv_sqrt_pi);
    }
    return rule;
}

QuadratureRule gauss_legendre(int n) {
    if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: n must be in [1, 64]");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    constexpr double eps = 1e-15;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= eps) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

double gaussian_expectation(const std::function<double(double)>& f, double mean, double stddev,
                            const QuadratureRule& rule) {
    if (!(stddev >= 0.0)) throw std::invalid_argument("gaussian_expectation: stddev must be >= 0");
    if (stddev == 0.0) return f(mean);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc += rule.weights[i] * f(mean + stddev * rule.nodes[i]);
    }
    return acc;
}

WeightedNodes gaussian_split_nodes(double mean, double stddev, std::span<const double> breakpoints,
                                   int nodes_per_panel, double half_width) {
    if (!(stddev > 0.0)) throw std::invalid_argument("gaussian_split_nodes: stddev must be > 0");
    if (nodes_per_panel < 2 || nodes_per_panel > 64) {
        throw std::invalid_argument("gaussian_split_nodes: nodes_per_panel must be in [2, 64]");
    }
    if (!(half_width > 0.0)) throw std::invalid_argument("gaussian_split_nodes: half_width");

    const double lo = mean - half_width * stddev;
    const double hi = mean + half_width * stddev;
    std::vector<double> edges = {lo, hi};
    for (double b : breakpoints) {
        if (b > lo && b < hi) edges.push_back(b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const QuadratureRule gl = gauss_legendre(nodes_per_panel);
    const double inv_norm = 1.0 / (stddev * std::sqrt(2.0 * M_PI));

    WeightedNodes out;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double a = edges[e], b = edges[e + 1];
        // Panels wider than one stddev lose Gauss-Legendre accuracy against
        // the density factor; subdivide.
        const int sub = std::max(1, static_cast<int>(std::ceil((b - a) / stddev)));
        for (int s = 0; s < sub; ++s) {
            const double pa = a + (b - a) * s / sub;
            const double pb = a + (b - a) * (s + 1) / sub;
            const double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
            for (int i = 0; i < nodes_per_panel; ++i) {
                const double xx = mid + half * gl.nodes[i];
                const double u = (xx - mean) / stddev;
                const double w = gl.weights[i] * half * inv_norm * std::exp(-0.5 * u * u);
                out.nodes.push_back(xx);
                out.weights.push_back(w);
            }
        }
    }
    return out;
}

double gaussian_expectation_split(const std::function<double(double)>& f, double mean,
                                  double stddev, std::span<const double> breakpoints,
                                  int nodes_per_panel, double half_width) {
    if (stddev == 0.0) return f(mean);
    const WeightedNodes wn = gaussian_split_nodes(mean, stddev, breakpoints, nodes_per_panel,
                                                  half_width);
    double acc = 0.0;
    for (std::size_t i = 0; i < wn.nodes.size(); ++i) acc += wn.weights[i] * f(wn.nodes[i]);
    return acc;
}

double log_sum_exp(std::span<const double> log_terms, std::span<const double> weights) {
    if (log_terms.size() != weights.size()) {
        throw std::invalid_argument("log_sum_exp: size mismatch");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log_terms.size(); ++i) {
        if (weights[i] > 0.0 && log_terms[i] > mx) mx = log_terms[i];
    }
    if (!std::isfinite(mx)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t i = 0; i < log_terms.size(); ++i) {
        if (weights[i] > 0.0) acc += weights[i] * std::exp(log_terms[i] - mx);
    }
    return mx + std::log(acc);
}

}  // namespace qbsde

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qbsde {

// Nodes and weights for E[f(G)], G standard normal: weights sum to 1.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule normalized for a standard normal (probabilists'
// convention). Newton iteration on the scaled three-term recurrence; extended
// precision internally so weights stay finite for n in the hundreds.
// Throws std::invalid_argument unless 1 <= n <= 2048.
QuadratureRule gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1]; weights sum to 2. 1 <= n <= 64.
QuadratureRule gauss_legendre(int n);

// Sum of w_i f(mean + stddev * node_i). stddev == 0 collapses to f(mean).
double gaussian_expectation(const std::function<double(double)>& f, double mean, double stddev,
                            const QuadratureRule& rule);

// Composite Gauss-Legendre realization of E[f(mean + stddev G)] for
// piecewise-smooth f: panels cover [mean - half_width*stddev,
// mean + half_width*stddev], split at every breakpoint (given in the argument
// space of f) and subdivided to at most one stddev per panel. Returned weights
// include the Gaussian density and sum to ~1; they are all positive, so the
// expansion is also usable for log-sum-exp accumulation.
struct WeightedNodes {
    std::vector<double> nodes;
    std::vector<double> weights;
};
WeightedNodes gaussian_split_nodes(double mean, double stddev, std::span<const double> breakpoints,
                                   int nodes_per_panel, double half_width = 12.0);

double gaussian_expectation_split(const std::function<double(double)>& f, double mean,
                                  double stddev, std::span<const double> breakpoints,
                                  int nodes_per_panel, double half_width = 12.0);

// log of sum_i weights[i] * exp(log_terms[i]), stable for large magnitudes.
// Entries with weight 0 are skipped; returns -inf if everything vanishes.
double log_sum_exp(std::span<const double> log_terms, std::span<const double> weights);

}  // namespace qbsde

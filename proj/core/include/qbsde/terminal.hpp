#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qbsde/envelopes.hpp"

namespace qbsde {

// Terminal payoff xi = g(B_T) for scalar terminal state. Carries the analytic
// structure the quadrature and hypothesis layers need: where g is non-smooth
// or crosses zero (panel edges for kink-splitting integration), how to find
// preimages of a level (so truncation corners become breakpoints too), and a
// certificate for which exponential moments of |xi| are finite.
struct TerminalFunction {
    std::string label;
    std::function<double(double)> g;

    // Sorted kinks and zero crossings of g; integrands phi(g(x)) are smooth
    // between consecutive entries.
    std::vector<double> breakpoints;

    // Solutions of g(x) = level, empty when there are none or the level set
    // has no isolated points. Used to propagate breakpoints through clamps.
    std::function<std::vector<double>(double)> preimages;

    // sup{lambda : E[e^{lambda |g(B_T)|}] < inf} as a function of the horizon
    // T (inf when every order is finite).
    std::function<double(double)> exp_moment_sup;

    bool integrable = true;  // E|xi| < inf
};

// Catalog:
//   linear    scale=1 shift=0   g(x) = scale*x + shift
//   abs                         g(x) = |x|
//   square                      g(x) = x^2
//   plus_abs                    g(x) = x + |x|
//   plus_part                   g(x) = max(x, 0)
//   constant  value=0           g(x) = value
// Unknown labels or parameters throw ConfigError.
TerminalFunction make_terminal(const std::string& label,
                               const std::map<std::string, double>& params = {});
std::vector<std::string> canonical_terminal_labels();

// min(g, cap); breakpoints gain the preimages of the cap level.
TerminalFunction truncate_upper(const TerminalFunction& base, double cap);

// clamp(g, -lower, upper) = min(g^+, upper) - min(g^-, lower); upper and
// lower must be >= 1 so the clamp brackets zero.
TerminalFunction truncate_two_sided(const TerminalFunction& base, double upper, double lower);

// |g|. Relies on zero crossings of g being listed among its breakpoints,
// which the catalog and both truncations guarantee.
TerminalFunction abs_terminal(const TerminalFunction& base);

// Exponential-moment certificate against the envelope's required order
// lambda = gamma e^{beta T}. ok means the certificate covers that order;
// energy_order is a concrete finite order strictly above it (NaN when the
// check fails), the one the energy estimate should integrate against.
struct MomentCheck {
    double required = 0.0;
    double available = 0.0;
    bool ok = false;
    double energy_order = 0.0;
};
MomentCheck check_exponential_moment(const TerminalFunction& terminal, double gamma, double beta,
                                     double T);

}  // namespace qbsde

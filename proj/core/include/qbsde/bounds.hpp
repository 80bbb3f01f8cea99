#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qbsde/envelopes.hpp"
#include "qbsde/path_ensemble.hpp"
#include "qbsde/terminal.hpp"

namespace qbsde {

struct BoundsOptions {
    // Per-step interpolation lattice; quadrature runs once per lattice point
    // and paths are filled by cubic spline. direct = true quadratures every
    // sample instead (slow, used to validate the lattice path).
    int lattice_points = 513;
    double lattice_pad = 0.5;
    int nodes_per_panel = 16;
    bool direct = false;
};

// Conditional a priori envelope along each path: at (m, i) with x = B_{t_i},
//   upper = (1/gamma) ln E[phi_t(g(x + sqrt(T-t) G))]
//   lower = -(1/gamma) ln E[phi_t(-g(x + sqrt(T-t) G))]
// with phi_t the closed-form comparison curve of the envelope. The terminal
// row is exact: lower = upper = g(B_T). Everything is accumulated in log
// space, so heavy-but-integrable tails do not overflow.
struct BoundProcess {
    long num_paths = 0;
    int num_steps = 0;
    std::vector<double> times;
    // Layout matches PathEnsemble: lower[m*(N+1) + i].
    std::vector<double> lower;
    std::vector<double> upper;

    // Sample diagnostics at t = 0: the bound seen by the raw terminal sample,
    // and the share of that sample mean carried by the largest 1% of terms.
    // A share near 1 means the certificate is formally fine but this ensemble
    // is too small to resolve the tail.
    double sample_exp_bound = 0.0;
    double sample_tail_share = 0.0;

    double lower_at(long m, int i) const { return lower[m * (num_steps + 1) + i]; }
    double upper_at(long m, int i) const { return upper[m * (num_steps + 1) + i]; }
};

// Throws IntegrabilityError when the terminal's exponential-moment
// certificate does not cover the order gamma e^{beta T} the envelope needs,
// and std::invalid_argument for dim != 1 ensembles.
BoundProcess compute_bounds(const PathEnsemble& ensemble, const TerminalFunction& terminal,
                            const QuadraticEnvelope& envelope, const BoundsOptions& options = {});

// First step index at which the bound envelope leaves [-level, level], per
// path; num_steps + 1 when it never does. Used to build localization stopping
// times for truncated-family comparisons.
std::vector<std::size_t> localization_times(const BoundProcess& process, double level);

// CSV rows "path,step,t,lower,upper", paths outermost.
void write_bounds_csv(std::ostream& os, const BoundProcess& process);

}  // namespace qbsde

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qbsde/bounds.hpp"
#include "qbsde/drivers.hpp"
#include "qbsde/path_ensemble.hpp"
#include "qbsde/regression.hpp"
#include "qbsde/terminal.hpp"

namespace qbsde {

struct SolverOptions {
    RegressionSpec regression;

    // Implicit treats the driver at (t_i, Y_i): Newton on
    // y - dt f(t_i, y, Z_i) = m_i, with an expanding-bracket bisection
    // fallback; StepFailureError if neither lands. Explicit pushes the driver
    // into the regression target at (t_i, Y_{i+1}, Z_i).
    bool implicit = true;
    int newton_max_iters = 40;
    double newton_tol = 1e-12;

    // 0 disables; otherwise the fitted Z is rescaled to norm <= z_cap before
    // it enters the driver. Quadratic drivers keep one rogue regression from
    // feeding dt |Z|^2 explosions back up the recursion.
    double z_cap = 0.0;

    // Adds g(state) as one regression column at every step. Near the final
    // steps the conditional mean is barely smoothed g, and when g has a kink
    // the best polynomial fit misses it by O(1/degree); with g in the span
    // that error collapses to the smoothing scale.
    bool terminal_in_basis = false;

    // When set, every fitted Y_i is projected into [lower, upper] of this
    // process (must match the ensemble shape). The band holds for the exact
    // solution, so the projection only removes regression overshoot.
    const BoundProcess* clip_to_bounds = nullptr;
};

struct SolverResult {
    long num_paths = 0;
    int num_steps = 0;
    int dim = 1;
    std::vector<double> times;
    std::vector<double> y;     // y[m*(N+1) + i]
    std::vector<double> z;     // z[(m*N + i)*dim + k], none for i = N
    std::vector<double> y_se;  // sampling SE of the conditional-mean fit behind y

    double y0 = 0.0;     // time-zero value (state is degenerate, so it is a mean)
    double y0_se = 0.0;
    double terminal_abs_mean = 0.0;
    std::string driver_label;
    std::string terminal_label;

    double y_at(long m, int i) const { return y[m * (num_steps + 1) + i]; }
    double se_at(long m, int i) const { return y_se[m * (num_steps + 1) + i]; }
    double z_at(long m, int i, int k = 0) const { return z[(m * num_steps + i) * dim + k]; }
    double z_norm2_at(long m, int i) const;
};

// Backward least-squares scheme: Y_N = g(B_T); then per step the martingale
// part Z_i comes from regressing (Y_{i+1} - m_i) dB_i / dt on the state, and
// Y_i from the conditional mean m_i plus the driver term. Scalar terminal
// state only (dim == 1).
SolverResult solve_lsmc(const PathEnsemble& ensemble, const Driver& driver,
                        const TerminalFunction& terminal, const SolverOptions& options = {});

// Solutions for the truncated terminals xi^{n,p} = min(xi^+, n) - min(xi^-, p)
// over the cap grid, all on the same ensemble so differences between family
// members carry no simulation noise. lower_caps empty = upper truncation only.
struct TruncatedSolve {
    double upper_cap = 0.0;
    double lower_cap = 0.0;  // 0 marks pure upper truncation
    SolverResult result;
};
std::vector<TruncatedSolve> solve_truncated_family(const PathEnsemble& ensemble,
                                                   const Driver& driver,
                                                   const TerminalFunction& base,
                                                   std::span<const double> upper_caps,
                                                   std::span<const double> lower_caps,
                                                   const SolverOptions& options = {});

// Solves the driver's equation and the one for its dominating driver with
// terminal |xi|, then checks |Y| <= Y_dom samplewise within tol_se combined
// standard errors. Throws SolverInconsistencyError when more than
// violation_threshold of the samples break the domination, and ConfigError
// if the driver carries no dominating structure.
struct DominatedSolve {
    SolverResult main;
    SolverResult dominating;
    double violation_rate = 0.0;
};
DominatedSolve solve_l1(const PathEnsemble& ensemble, const Driver& driver,
                        const TerminalFunction& terminal, const SolverOptions& options = {},
                        double tol_se = 3.0, double violation_threshold = 0.01);

// Sample version of the Z-energy estimate: lhs = E sum |Z_i|^2 dt, rhs the
// exponential functional of Y the a priori estimate bounds it by,
//   2 E[ (1/gamma^2) max_i e^{gamma|Y_i|}
//        + (1/gamma) sum_i e^{gamma|Y_i|}(alpha + beta|Y_i|) dt ].
// pass = lhs <= slack * rhs.
struct EnergyReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 1.05;
    bool pass = false;
};
EnergyReport energy_estimate(const SolverResult& result, const QuadraticEnvelope& envelope,
                             double slack = 1.05);

// E[ max_i |Y_a(i) - Y_b(i)| ]: the uniform path distance between two solves
// on the same ensemble. The truncation-stability checks watch it vanish.
double terminal_continuity_stat(const SolverResult& a, const SolverResult& b);

// CSV rows "path,step,t,Y,Z1..Zd"; the terminal row has no increment, its Z
// columns are 0.
void write_solution_csv(std::ostream& os, const SolverResult& result);

}  // namespace qbsde

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "qbsde/drivers.hpp"
#include "qbsde/terminal.hpp"

namespace qbsde {

struct PointValue {
    double y = 0.0;
    double z = 0.0;
};

struct OracleOptions {
    int nodes_per_panel = 24;
    double stability_tol = 1e-8;  // max move allowed when doubling the node count
    double diff_step = 1e-5;      // central-difference step for Z
};

// Reference value for the purely quadratic driver (gamma/2)|z|^2 with
// terminal g(B_T): the exponential transform turns the equation into a heat
// expectation, so
//   Y(t,x) = (1/gamma) ln E[exp(gamma g(x + sqrt(T-t) G))],   Z = dY/dx.
// The expectation is a kink-split composite rule accumulated in log space;
// the window is widened until the log-integrand has decayed at the edges and
// the node count is doubled as a stability check. Throws IntegrabilityError
// when no window works or refinement still moves the value, which is how a
// missing exponential moment shows up numerically.
PointValue quadratic_oracle(const TerminalFunction& terminal, double gamma, double T, double t,
                            double x, const OracleOptions& options = {});

// Reference value for the linear driver beta*y with terminal g(B_T):
//   Y(t,x) = e^{beta (T-t)} E[g(x + sqrt(T-t) G)],   Z = dY/dx.
// beta == 0 is the zero-driver oracle.
PointValue linear_oracle(const TerminalFunction& terminal, double beta, double T, double t,
                         double x, const OracleOptions& options = {});

// Reference value for a z-independent driver paired with a constant terminal
// condition.  The solution is then deterministic: Y solves the backward ODE
// dY/dt = -f(t, Y, 0) with Y(T) = value, and Z vanishes.  Integrated with
// fixed-step RK4, so the O(h^4) error sits far below every tolerance used
// against this oracle.  Throws ConfigError if the driver visibly depends on
// z along the integrated trajectory.
PointValue constant_terminal_oracle(const Driver& driver, double value, double horizon,
                                    double t, int rk4_steps = 4096);

struct OracleRow {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Header "t,x,Y,Z", one row per lattice point.
void write_oracle_csv(std::ostream& os, std::span<const OracleRow> rows);

}  // namespace qbsde

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qbsde/bounds.hpp"
#include "qbsde/philox.hpp"
#include "qbsde/solver.hpp"

namespace qbsde {

// One property check over a Monte Carlo solve. violation_rate is the share of
// samples (or of consecutive pairs, for order checks) breaking the property
// beyond its statistical tolerance; pass means the rate stayed at or below
// threshold.
struct CheckReport {
    std::string check;
    std::string scenario;
    double violation_rate = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Y_lo <= Y_hi samplewise within se_mult combined fit SEs plus abs_tol.
// Shapes must match (same ensemble); the caller asserts the order premise
// (smaller terminal or pointwise-smaller driver). Where the two solutions
// genuinely coincide the fitted surfaces tie-break on basis residuals, so
// abs_tol plays the same role as in the other order checks.
CheckReport check_comparison(const SolverResult& lo, const SolverResult& hi,
                             const std::string& scenario, double se_mult = 3.0,
                             double threshold = 0.01, double abs_tol = 0.0);

// lower - tol <= Y <= upper + tol against the a priori band, tol driven by
// the solve's own fit SEs plus abs_tol (the band itself is quadrature-exact;
// abs_tol covers the fit's approximation bias, which the SEs cannot see).
CheckReport check_sandwich(const SolverResult& result, const BoundProcess& band,
                           const std::string& scenario, double se_mult = 3.0,
                           double threshold = 0.01, double abs_tol = 0.0);

// Orders every comparable pair in the cap grid: same lower cap and increasing
// upper cap must increase Y; same upper cap and increasing lower cap must
// decrease it. Pools the samplewise comparisons of all such pairs. Family
// members share the regression basis but not the fitted coefficients, so
// their approximation biases differ; abs_tol is the order slack granted for
// that on top of the statistical one (real order defects show up orders of
// magnitude above it).
CheckReport check_monotone_family(std::span<const TruncatedSolve> family,
                                  const std::string& scenario, double se_mult = 3.0,
                                  double threshold = 0.01, double abs_tol = 0.0);

// Uniform distances d_k = E sup_t |Y^k - Y_full| must not increase along the
// family (listed with growing caps) beyond twice the combined batch SEs of
// the two distance estimates. violation_rate is over consecutive pairs.
CheckReport check_terminal_continuity(std::span<const TruncatedSolve> family,
                                      const SolverResult& full, const std::string& scenario,
                                      double threshold = 0.0);

// Pathwise norm summary of a solve:
//   s_norm = E[sup_t |Y_t|^beta]^{min(1,1/beta)}
//   m_norm = E[(sum_i |Z_i|^2 dt)^{beta/2}]^{min(1,1/beta)}
// plus a uniform-integrability probe over num_stopping sampled grid stopping
// times (half hitting times of |Y| levels, half independently randomized
// indices drawn from the seed's stopping-time streams): class_d_level is the
// worst E|Y_tau|, and tail_level the smallest dyadic L with worst
// E[|Y_tau| 1{|Y_tau|>L}] <= tail_threshold. uniformly_integrable reports
// whether such an L exists below 2^20.
struct NormReport {
    double beta = 1.0;
    double s_norm = 0.0;
    double m_norm = 0.0;
    double class_d_level = 0.0;
    double class_d_tail = 0.0;
    double tail_level = 0.0;
    bool uniformly_integrable = false;
};
NormReport estimate_norms(const SolverResult& result, double beta, SeedSpec seed,
                          int num_stopping = 20, double tail_threshold = 0.05);

// CSV rows "check,scenario,violation_rate,threshold,pass" (pass as 1/0).
void write_checks_csv(std::ostream& os, std::span<const CheckReport> reports);

}  // namespace qbsde

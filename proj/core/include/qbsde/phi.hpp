#pragma once

#include <optional>
#include <span>

#include "qbsde/drivers.hpp"
#include "qbsde/envelopes.hpp"

namespace qbsde {

// Comparison map for a normalized quadratic envelope:
//   H(p) = p (alpha*gamma + beta*ln p) for p >= 1, alpha*gamma for p < 1.
// Continuous, nondecreasing and convex; throws std::invalid_argument if the
// envelope is not normalized.
double eval_H(double p, const QuadraticEnvelope& env);

// Superlinear counterpart:
//   H(p) = gamma p h(ln(p)/gamma) for p >= p0, c for p < p0.
double eval_H_superlinear(double p, const SuperlinearEnvelope& env);

// Exponential transform of a driver:
//   F(s,p,q) = gamma p f(s, ln(p)/gamma, q/(gamma p)) - |q|^2/(2p) for p > 0,
//   and 0 otherwise. Under the envelope with the same gamma, F <= H.
double eval_F(double s, double p, std::span<const double> q, const Driver& driver, double gamma);

// Deterministic envelope curve: the solution of phi' = -H(phi) with terminal
// value phi_T = e^{gamma z}, in closed form. Returned in log scale so large
// arguments stay representable; phi_linear exponentiates and may overflow to
// +inf for extreme (z, beta, T).
//
// Branches: a start at or above 1 (z >= 0) stays on the upper branch
//   ln phi_t = gamma alpha (e^{beta(T-t)} - 1)/beta + z gamma e^{beta(T-t)}
// (limit gamma alpha (T-t) + gamma z when beta = 0); a start below 1 grows
// linearly, phi_t = e^{gamma z} + gamma alpha (T-t), until it crosses 1 at the
// switch time, then follows the upper branch from level 1.
double log_phi_linear(double t, double z, const QuadraticEnvelope& env, double T);
double phi_linear(double t, double z, const QuadraticEnvelope& env, double T);

// Time s in (-inf, T] where the sub-threshold branch e^{gamma z} +
// gamma alpha (T-s) reaches 1. nullopt when z >= 0 (starts at or above 1) or
// alpha == 0 (never crosses). A negative value means the curve stays below 1
// on all of [0, T].
std::optional<double> switch_time(double z, const QuadraticEnvelope& env, double T);

// Independent check of the closed forms: fixed-step RK4 for phi' = -H(phi)
// integrated backward from T to t. Throws ToleranceError if the curve leaves
// the representable range.
double ode_phi_oracle(double t, double z, const QuadraticEnvelope& env, double T, int steps);
double ode_phi_oracle_superlinear(double t, double z, const SuperlinearEnvelope& env, double T,
                                  int steps);

}  // namespace qbsde

#pragma once

#include <memory>

#include "qbsde/envelopes.hpp"

namespace qbsde {

// Integrated reciprocal of the damped growth shape
//   theta(x) = (c/gamma) e^{-gamma x} for x < x0,  h(x) for x >= x0,
// with x0 = ln(p0)/gamma:
//   Theta(x) = integral of 1/theta from -inf to x.
// The left tail is exact, Theta(x) = e^{gamma x}/c for x <= x0; to the right a
// cumulative table with Gauss-Legendre panels covers [x0, inf), extending
// itself on demand (the integral diverges, so every inverse query is
// eventually reachable). Panel lengths track h so slowly-diverging shapes
// reach large arguments in O(Theta) panels.
//
// The envelope curve it induces:
//   ln phi_t(z) = gamma * Theta^{-1}(T - t + Theta(z)),
// which for a linear shape coincides with the closed-form curve.
class ThetaTable {
public:
    explicit ThetaTable(SuperlinearEnvelope env);

    double theta(double x) const;

    double value(double x) const;    // Theta(x)
    double inverse(double v) const;  // Theta^{-1}(v), v > 0; Newton + bisection to ~1e-12

    const SuperlinearEnvelope& envelope() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

double log_phi_general(double t, double z, const ThetaTable& table, double T);
double phi_general(double t, double z, const ThetaTable& table, double T);

}  // namespace qbsde

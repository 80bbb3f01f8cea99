#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace qbsde {

struct RegressionSpec {
    int degree = 4;        // total degree of the polynomial basis, >= 0
    double ridge = 1e-8;   // Tikhonov weight on all coefficients except the constant
    std::optional<std::array<double, 2>> clip_box;  // clamp predictions into [lo, hi]

    bool operator==(const RegressionSpec&) const = default;
};

// Least-squares surface for conditional expectations given d-dimensional state
// (d <= 2 in practice). Basis: products of probabilists' Hermite polynomials
// in x_k/scale normalized by 1/sqrt(j!), total degree <= spec.degree; with
// state ~ N(0, scale^2 I) the population Gram matrix is the identity, which
// keeps the normal equations well conditioned.
//
// The ridge term never penalizes the constant, so degree 0 reproduces the
// sample mean exactly and constant targets are fitted exactly at any degree.
// Zero sample variance in the state (e.g. t = 0) degrades the fit to the
// plain mean instead of producing a singular system.
class FittedRegression {
public:
    double predict(std::span<const double> x) const;
    double predict1(double x) const;  // dim-1 convenience

    // sigma_hat * sqrt(b' A^{-1} G A^{-1} b): sampling standard error of the
    // fitted surface at x (A = G + ridge penalty, G = X'X).
    double prediction_se(std::span<const double> x) const;
    double prediction_se1(double x) const;

    // Fitted values at the sample points used in the fit, and the RMS of
    // prediction_se over those points.
    const std::vector<double>& fitted_values() const;
    double rms_prediction_se() const;

    int num_basis() const;
    double residual_sigma() const;

private:
    friend class RegressionDesign;
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    std::vector<double> fitted_;
};

// Extra scalar regressor evaluated on the state. Best polynomial
// approximation of a kink degrades like 1/degree, so a target with one is
// out of reach for any affordable degree; putting the offending function
// itself into the span removes the obstruction (the payoff-in-basis trick
// from least-squares Monte Carlo practice).
using FeatureFn = std::function<double(std::span<const double>)>;

// Shared design matrix and factorization for fitting several targets against
// the same state sample (the backward solver fits Y and each Z coordinate per
// step). Throws SingularSystemError if the normal equations are numerically
// singular and spec.ridge == 0.
class RegressionDesign {
public:
    // state: row-major [m*dim + k]; scale: dispersion of the state coordinates
    // (sqrt(t_i) for Brownian state). scale <= 0 or a zero-variance sample
    // collapses the basis to the constant. feature, when set, adds one
    // standardized column feature(x); it is dropped again on samples where it
    // is (numerically) constant, and the ridge weight applies to its
    // coefficient like any non-constant column.
    RegressionDesign(std::span<const double> state, int dim, const RegressionSpec& spec,
                     double scale, FeatureFn feature = {});

    FittedRegression solve(std::span<const double> targets) const;

    int num_basis() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// One-shot convenience: fitted conditional-expectation values at the sample.
std::vector<double> regress_conditional_expectation(std::span<const double> targets,
                                                    std::span<const double> state, int dim,
                                                    const RegressionSpec& spec, double scale);

}  // namespace qbsde

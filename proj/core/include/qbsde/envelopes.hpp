#pragma once

#include <cmath>
#include <functional>
#include <string>

namespace qbsde {

// Growth envelope |f(t,y,z)| <= alpha + beta|y| + (gamma/2)|z|^2.
// Normalized means alpha >= beta/gamma, which the comparison function H and
// the closed-form envelope curves assume.
struct QuadraticEnvelope {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 1.0;

    bool operator==(const QuadraticEnvelope&) const = default;

    bool valid() const { return alpha >= 0.0 && beta >= 0.0 && gamma > 0.0; }
    bool normalized() const { return valid() && alpha * gamma >= beta; }
    double bound(double y, double z_norm2) const {
        return alpha + beta * std::abs(y) + 0.5 * gamma * z_norm2;
    }
};

// Raises alpha to beta/gamma when needed; throws std::invalid_argument if the
// envelope is not valid.
QuadraticEnvelope normalize_envelope(QuadraticEnvelope env);

// Nondecreasing positive growth shape y -> h(y) on [0, inf).
struct SuperlinearShape {
    std::string label;
    std::function<double(double)> value;
};

// Growth envelope |f(t,y,z)| <= h(|y|) + (gamma/2)|z|^2 together with the two
// constants its comparison function needs:
//   c  = sup_{p in (0,1)} gamma * p * h(-ln(p)/gamma)
//   p0 = inf{p >= 1 : gamma * p * h(ln(p)/gamma) >= c}
// For h(y) = alpha + beta*y with alpha*gamma >= beta these reduce to
// c = gamma*alpha and p0 = 1.
struct SuperlinearEnvelope {
    SuperlinearShape h;
    double gamma = 1.0;
    double c = 0.0;
    double p0 = 1.0;

    double bound(double y, double z_norm2) const {
        return h.value(std::abs(y)) + 0.5 * gamma * z_norm2;
    }
};

// Computes c and p0 numerically (dense ladder plus golden-section refinement
// for the sup; bisection for p0). Throws HypothesisError if h is not positive
// and nondecreasing on a sampled ladder, or if the sup keeps growing as the
// search window expands (the exponential decay fails to dominate h).
SuperlinearEnvelope build_superlinear(SuperlinearShape h, double gamma);

// h(y) = alpha + beta*y as a shape, for cross-checking the reduction to the
// quadratic case.
SuperlinearShape linear_shape(double alpha, double beta);

// h(y) = alpha*(y+e)*ln(y+e).
SuperlinearShape log_superlinear_shape(double alpha);

}  // namespace qbsde

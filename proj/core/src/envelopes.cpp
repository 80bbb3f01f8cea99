#include "qbsde/envelopes.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

// Golden-section maximization on [a, b] for unimodal-near-peak objectives.
double golden_max(const std::function<double(double)>& f, double a, double b) {
    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

}  // namespace

QuadraticEnvelope normalize_envelope(QuadraticEnvelope env) {
    if (!env.valid()) {
        throw std::invalid_argument(
            "normalize_envelope: need alpha >= 0, beta >= 0, gamma > 0");
    }
    env.alpha = std::max(env.alpha, env.beta / env.gamma);
    return env;
}

SuperlinearShape linear_shape(double alpha, double beta) {
    if (!(alpha > 0.0) || beta < 0.0) {
        throw std::invalid_argument("linear_shape: need alpha > 0 and beta >= 0");
    }
    return SuperlinearShape{"linear", [alpha, beta](double y) { return alpha + beta * y; }};
}

SuperlinearShape log_superlinear_shape(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("log_superlinear_shape: need alpha > 0");
    return SuperlinearShape{"log_superlinear", [alpha](double y) {
                                const double s = y + M_E;
                                return alpha * s * std::log(s);
                            }};
}

SuperlinearEnvelope build_superlinear(SuperlinearShape h, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("build_superlinear: gamma must be > 0");

    // Shape sanity on a ladder: positive and nondecreasing.
    {
        double prev = h.value(0.0);
        if (!(prev > 0.0) || !std::isfinite(prev)) {
            throw HypothesisError("growth shape must be positive at 0 (label '" + h.label + "')");
        }
        for (int i = 1; i <= 400; ++i) {
            const double y = 0.05 * i * i;  // reaches 8000
            const double v = h.value(y);
            if (!std::isfinite(v) || v < prev * (1.0 - 1e-12)) {
                throw HypothesisError("growth shape must be finite and nondecreasing (label '" +
                                      h.label + "')");
            }
            prev = v;
        }
    }

    // c = gamma * sup_{y >= 0} e^{-gamma y} h(y); the decay must win, so the
    // argmax should sit well inside the window. A maximum that keeps riding
    // the right edge as the window doubles means the sup is infinite.
    const auto objective = [&](double y) { return std::exp(-gamma * y) * h.value(y); };
    double y_hi = 80.0 / gamma;
    double sup = 0.0;
    const int ladder = 65536;
    bool located = false;
    for (int round = 0; round < 8 && !located; ++round, y_hi *= 2.0) {
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i <= ladder; ++i) {
            const double y = y_hi * i / ladder;
            const double v = objective(y);
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        if (arg >= ladder - 2) continue;  // still rising at the edge; widen
        const double step = y_hi / ladder;
        const double lo = std::max(0.0, (arg - 1) * step);
        sup = golden_max(objective, lo, (arg + 1) * step);
        sup = std::max(sup, best);
        located = true;
    }
    if (!located) {
        throw HypothesisError("exponential decay does not dominate growth shape '" + h.label +
                              "'; the comparison constant c is infinite");
    }

    SuperlinearEnvelope env;
    env.gamma = gamma;
    env.c = gamma * sup;
    env.h = std::move(h);

    // p0: psi(p) = gamma * p * h(ln(p)/gamma) is increasing on [1, inf).
    const auto psi = [&](double p) { return gamma * p * env.h.value(std::log(p) / gamma); };
    if (psi(1.0) >= env.c) {
        env.p0 = 1.0;
    } else {
        double lo = 1.0, hi = 2.0;
        int guard = 0;
        while (psi(hi) < env.c) {
            lo = hi;
            hi *= 2.0;
            if (++guard > 400) {
                throw HypothesisError("comparison threshold p0 not reachable for shape '" +
                                      env.h.label + "'");
            }
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (psi(mid) >= env.c ? hi : lo) = mid;
        }
        env.p0 = hi;
    }
    return env;
}

}  // namespace qbsde

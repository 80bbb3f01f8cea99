#include "qbsde/phi.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {

double eval_H(double p, const QuadraticEnvelope& env) {
    if (!env.normalized()) {
        throw std::invalid_argument("eval_H: envelope must be normalized (alpha*gamma >= beta)");
    }
    if (p < 1.0) return env.alpha * env.gamma;
    return p * (env.alpha * env.gamma + env.beta * std::log(p));
}

double eval_H_superlinear(double p, const SuperlinearEnvelope& env) {
    if (p < env.p0) return env.c;
    return env.gamma * p * env.h.value(std::log(p) / env.gamma);
}

double eval_F(double s, double p, std::span<const double> q, const Driver& driver, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("eval_F: gamma must be > 0");
    if (p <= 0.0) return 0.0;
    std::vector<double> scaled(q.size());
    double q_norm2 = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        scaled[k] = q[k] / (gamma * p);
        q_norm2 += q[k] * q[k];
    }
    const double y = std::log(p) / gamma;
    return gamma * p * driver.f(s, y, scaled) - q_norm2 / (2.0 * p);
}

std::optional<double> switch_time(double z, const QuadraticEnvelope& env, double T) {
    if (!env.normalized()) {
        throw std::invalid_argument("switch_time: envelope must be normalized");
    }
    if (z >= 0.0) return std::nullopt;
    const double ag = env.alpha * env.gamma;
    if (ag == 0.0) return std::nullopt;
    return T - (1.0 - std::exp(env.gamma * z)) / ag;
}

namespace {

// ln phi on the upper branch started from level e^{gamma z} >= 1 at time s0.
double log_upper_branch(double t, double z, const QuadraticEnvelope& env, double s0) {
    const double tau = s0 - t;
    if (env.beta == 0.0) return env.gamma * env.alpha * tau + env.gamma * z;
    const double growth = std::exp(env.beta * tau);
    return env.gamma * env.alpha * (growth - 1.0) / env.beta + z * env.gamma * growth;
}

}  // namespace

double log_phi_linear(double t, double z, const QuadraticEnvelope& env, double T) {
    if (!env.normalized()) {
        throw std::invalid_argument("log_phi_linear: envelope must be normalized");
    }
    if (!(t <= T)) throw std::invalid_argument("log_phi_linear: t must be <= T");
    if (z >= 0.0) return log_upper_branch(t, z, env, T);

    const double ag = env.alpha * env.gamma;
    if (ag == 0.0) return env.gamma * z;  // normalized => beta == 0, H vanishes below 1

    const double s = T - (1.0 - std::exp(env.gamma * z)) / ag;
    if (t >= s) {
        // Still below level 1: linear segment.
        return std::log(std::exp(env.gamma * z) + ag * (T - t));
    }
    return log_upper_branch(t, 0.0, env, s);
}

double phi_linear(double t, double z, const QuadraticEnvelope& env, double T) {
    return std::exp(log_phi_linear(t, z, env, T));
}

namespace {

template <class HFun>
double rk4_backward(double t, double z, double gamma, double T, int steps, const HFun& h_of) {
    if (steps < 1) throw std::invalid_argument("ode_phi_oracle: steps must be >= 1");
    if (!(t <= T)) throw std::invalid_argument("ode_phi_oracle: t must be <= T");
    // tau = T - s turns phi' = -H(phi) into d phi/d tau = H(phi).
    double phi = std::exp(gamma * z);
    if (!std::isfinite(phi)) {
        throw ToleranceError("ode_phi_oracle: terminal level overflows");
    }
    const double h = (T - t) / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = h_of(phi);
        const double k2 = h_of(phi + 0.5 * h * k1);
        const double k3 = h_of(phi + 0.5 * h * k2);
        const double k4 = h_of(phi + h * k3);
        phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!(phi < 1e290)) {
            throw ToleranceError("ode_phi_oracle: curve leaves the representable range");
        }
    }
    return phi;
}

}  // namespace

double ode_phi_oracle(double t, double z, const QuadraticEnvelope& env, double T, int steps) {
    if (!env.normalized()) {
        throw std::invalid_argument("ode_phi_oracle: envelope must be normalized");
    }
    return rk4_backward(t, z, env.gamma, T, steps,
                        [&](double p) { return eval_H(p, env); });
}

double ode_phi_oracle_superlinear(double t, double z, const SuperlinearEnvelope& env, double T,
                                  int steps) {
    return rk4_backward(t, z, env.gamma, T, steps,
                        [&](double p) { return eval_H_superlinear(p, env); });
}

}  // namespace qbsde

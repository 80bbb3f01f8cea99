#include "qbsde/theta.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qbsde/errors.hpp"
#include "qbsde/quadrature.hpp"

namespace qbsde {

struct ThetaTable::Impl {
    SuperlinearEnvelope env;
    double x0 = 0.0;        // ln(p0)/gamma
    double theta_left = 0.0;  // Theta(x0) = p0/c
    QuadratureRule gl = gauss_legendre(32);
    std::vector<double> knots;  // knots[0] == x0
    std::vector<double> cum;    // cum[j] = Theta(knots[j])

    double integrate(double a, double b) const {
        // 1/h over [a, b]; panel lengths are chosen so h barely moves here.
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            acc += gl.weights[i] / env.h.value(mid + half * gl.nodes[i]);
        }
        return acc * half;
    }

    void extend_to_x(double x) {
        while (knots.back() < x) append_panel();
    }

    void extend_to_value(double v) {
        while (cum.back() < v) append_panel();
    }

    void append_panel() {
        if (knots.size() > 2000000) {
            throw ToleranceError("theta table: range request is out of reach");
        }
        const double x = knots.back();
        const double len = std::clamp(0.01 * env.h.value(x), 0.05, 1e7);
        knots.push_back(x + len);
        cum.push_back(cum.back() + integrate(x, x + len));
    }
};

ThetaTable::ThetaTable(SuperlinearEnvelope env) : impl_(std::make_shared<Impl>()) {
    impl_->env = std::move(env);
    impl_->x0 = std::log(impl_->env.p0) / impl_->env.gamma;
    impl_->theta_left = impl_->env.p0 / impl_->env.c;
    impl_->knots = {impl_->x0};
    impl_->cum = {impl_->theta_left};
}

const SuperlinearEnvelope& ThetaTable::envelope() const { return impl_->env; }

double ThetaTable::theta(double x) const {
    const auto& im = *impl_;
    if (x < im.x0) return (im.env.c / im.env.gamma) * std::exp(-im.env.gamma * x);
    return im.env.h.value(x);
}

double ThetaTable::value(double x) const {
    auto& im = *impl_;
    if (x <= im.x0) return std::exp(im.env.gamma * x) / im.env.c;
    im.extend_to_x(x);
    const auto it = std::upper_bound(im.knots.begin(), im.knots.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - im.knots.begin()) - 1;
    return im.cum[j] + im.integrate(im.knots[j], x);
}

double ThetaTable::inverse(double v) const {
    auto& im = *impl_;
    if (!(v > 0.0)) throw std::invalid_argument("ThetaTable::inverse: argument must be > 0");
    if (v <= im.theta_left) return std::log(im.env.c * v) / im.env.gamma;

    im.extend_to_value(v);
    // First panel boundary at or above v; extend_to_value guarantees it exists.
    const auto it = std::lower_bound(im.cum.begin(), im.cum.end(), v);
    const std::size_t j = static_cast<std::size_t>(it - im.cum.begin());
    if (im.cum[j] == v) return im.knots[j];
    double lo = im.knots[j - 1], hi = im.knots[j];
    const double lo_v = im.cum[j - 1];

    // Newton on Theta(x) - v with exact derivative 1/theta, bisection guarded.
    double x = lo + (hi - lo) * std::min(1.0, (v - lo_v) / (im.cum[j] - lo_v));
    for (int iter = 0; iter < 100; ++iter) {
        const double fx = value(x) - v;
        if (fx > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double step = fx * theta(x);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-13 * (1.0 + std::abs(x))) return next;
        x = next;
    }
    if (hi - lo > 1e-9 * (1.0 + std::abs(hi))) {
        throw ToleranceError("ThetaTable::inverse: did not reach tolerance");
    }
    return 0.5 * (lo + hi);
}

double log_phi_general(double t, double z, const ThetaTable& table, double T) {
    if (!(t <= T)) throw std::invalid_argument("log_phi_general: t must be <= T");
    const double gamma = table.envelope().gamma;
    return gamma * table.inverse((T - t) + table.value(z));
}

double phi_general(double t, double z, const ThetaTable& table, double T) {
    return std::exp(log_phi_general(t, z, table, T));
}

}  // namespace qbsde

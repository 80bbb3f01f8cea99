#include "qbsde/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

double norm2(std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
}

double norm(std::span<const double> z) { return std::sqrt(norm2(z)); }

double require_param(const std::map<std::string, double>& params, const std::string& key,
                     double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& label, const std::map<std::string, double>& params,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, value] : params) {
        (void)value;
        if (!allowed.contains(key)) {
            throw ConfigError("driver '" + label + "' does not take parameter '" + key + "'");
        }
    }
}

void record_worst(std::vector<GrowthWitness>& worst, GrowthWitness w, std::size_t keep = 3) {
    worst.push_back(std::move(w));
    std::sort(worst.begin(), worst.end(),
              [](const GrowthWitness& a, const GrowthWitness& b) { return a.excess > b.excess; });
    if (worst.size() > keep) worst.resize(keep);
}

}  // namespace

double Driver::growth_bound(double y, double z_norm2) const {
    return std::visit([&](const auto& env) { return env.bound(y, z_norm2); }, envelope);
}

double Driver::gamma() const {
    return std::visit([](const auto& env) { return env.gamma; }, envelope);
}

std::vector<std::string> canonical_driver_labels() {
    return {"zero",   "pure_quadratic", "linear",        "bounded_quadratic",
            "l1_holder", "sqrt_z",      "l1_dominating", "superlinear_log"};
}

Driver dominating_driver(const L1DriverSpec& spec) {
    const double c = spec.c, a = spec.alpha;
    Driver d;
    d.label = "l1_dominating";
    d.f = [c, a](double, double y, std::span<const double> z) {
        const double zn = norm(z);
        return 2.0 * c * (1.0 + std::abs(y) + std::min(std::pow(zn, a), zn));
    };
    d.dfdy = [c](double, double y, std::span<const double>) {
        return y >= 0.0 ? 2.0 * c : -2.0 * c;
    };
    d.envelope = normalize_envelope({4.0 * c, 2.0 * c, 4.0 * c});
    // min(|z|^a, |z|) has slope at most 1, so the whole map is 2c-Lipschitz in z.
    d.l1 = L1DriverSpec{.mu = 2.0 * c, .lip_z = 2.0 * c, .delta = 2.0 * c, .alpha = a,
                        .c = 2.0 * c, .g0 = 1.0};
    return d;
}

Driver make_driver(const std::string& label, const std::map<std::string, double>& params) {
    Driver d;
    d.label = label;
    if (label == "zero") {
        reject_unknown(label, params, {});
        d.f = [](double, double, std::span<const double>) { return 0.0; };
        d.dfdy = [](double, double, std::span<const double>) { return 0.0; };
        d.envelope = QuadraticEnvelope{0.0, 0.0, 1.0};
    } else if (label == "pure_quadratic") {
        reject_unknown(label, params, {"gamma"});
        const double gamma = require_param(params, "gamma", 1.0);
        if (!(gamma > 0.0)) throw ConfigError("pure_quadratic: gamma must be > 0");
        d.f = [gamma](double, double, std::span<const double> z) {
            return 0.5 * gamma * norm2(z);
        };
        d.dfdy = [](double, double, std::span<const double>) { return 0.0; };
        d.envelope = QuadraticEnvelope{0.0, 0.0, gamma};
    } else if (label == "linear") {
        reject_unknown(label, params, {"beta", "gamma"});
        const double beta = require_param(params, "beta", 1.0);
        const double gamma = require_param(params, "gamma", 1.0);
        if (beta < 0.0) throw ConfigError("linear: beta must be >= 0");
        if (!(gamma > 0.0)) throw ConfigError("linear: gamma must be > 0");
        d.f = [beta](double, double y, std::span<const double>) { return beta * y; };
        d.dfdy = [beta](double, double, std::span<const double>) { return beta; };
        d.envelope = normalize_envelope({0.0, beta, gamma});
    } else if (label == "bounded_quadratic") {
        reject_unknown(label, params, {"alpha", "gamma"});
        const double alpha = require_param(params, "alpha", 1.0);
        const double gamma = require_param(params, "gamma", 1.0);
        if (alpha < 0.0) throw ConfigError("bounded_quadratic: alpha must be >= 0");
        if (!(gamma > 0.0)) throw ConfigError("bounded_quadratic: gamma must be > 0");
        d.f = [alpha, gamma](double, double, std::span<const double> z) {
            return alpha + 0.5 * gamma * norm2(z);
        };
        d.dfdy = [](double, double, std::span<const double>) { return 0.0; };
        d.envelope = QuadraticEnvelope{alpha, 0.0, gamma};
    } else if (label == "l1_holder") {
        reject_unknown(label, params, {"c", "alpha"});
        const double c = require_param(params, "c", 1.0);
        const double a = require_param(params, "alpha", 0.5);
        if (!(c > 0.0)) throw ConfigError("l1_holder: c must be > 0");
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("l1_holder: alpha must be in (0,1)");
        d.f = [c, a](double, double y, std::span<const double> z) {
            return c * (1.0 + std::abs(y) + std::pow(norm(z), a));
        };
        d.dfdy = [c](double, double y, std::span<const double>) {
            return y >= 0.0 ? c : -c;
        };
        d.envelope = normalize_envelope({2.0 * c, c, 2.0 * c});
        d.l1 = L1DriverSpec{.mu = c,
                            .lip_z = std::numeric_limits<double>::infinity(),
                            .delta = c,
                            .alpha = a,
                            .c = c,
                            .g0 = 1.0};
    } else if (label == "sqrt_z") {
        reject_unknown(label, params, {});
        d.f = [](double, double, std::span<const double> z) { return std::sqrt(norm(z)); };
        d.dfdy = [](double, double, std::span<const double>) { return 0.0; };
        d.envelope = normalize_envelope({1.0, 0.0, 1.0});
        d.l1 = L1DriverSpec{.mu = 0.0,
                            .lip_z = std::numeric_limits<double>::infinity(),
                            .delta = 1.0,
                            .alpha = 0.5,
                            .c = 1.0,
                            .g0 = 1.0};
    } else if (label == "l1_dominating") {
        reject_unknown(label, params, {"c", "alpha"});
        const double c = require_param(params, "c", 1.0);
        const double a = require_param(params, "alpha", 0.5);
        if (!(c > 0.0)) throw ConfigError("l1_dominating: c must be > 0");
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("l1_dominating: alpha must be in (0,1)");
        d = dominating_driver(L1DriverSpec{.alpha = a, .c = c});
    } else if (label == "superlinear_log") {
        reject_unknown(label, params, {"alpha", "gamma"});
        const double alpha = require_param(params, "alpha", 1.0);
        const double gamma = require_param(params, "gamma", 1.0);
        if (!(alpha > 0.0)) throw ConfigError("superlinear_log: alpha must be > 0");
        if (!(gamma > 0.0)) throw ConfigError("superlinear_log: gamma must be > 0");
        d.f = [alpha](double, double y, std::span<const double>) {
            const double s = std::abs(y) + M_E;
            return alpha * s * std::log(s);
        };
        d.dfdy = [alpha](double, double y, std::span<const double>) {
            const double s = std::abs(y) + M_E;
            const double g = alpha * (std::log(s) + 1.0);
            return y >= 0.0 ? g : -g;
        };
        d.envelope = build_superlinear(log_superlinear_shape(alpha), gamma);
    } else {
        throw ConfigError("unknown driver label '" + label + "'");
    }
    return d;
}

GrowthReport validate_growth(const Driver& driver, long samples, double y_range, double z_range,
                             double horizon, SeedSpec seed, int dim, double tol) {
    if (samples < 1) throw std::invalid_argument("validate_growth: samples must be >= 1");
    if (dim < 1) throw std::invalid_argument("validate_growth: dim must be >= 1");
    Philox4x32 rng = seed.stream(SeedSpec::kSampling, 2);
    GrowthReport report;
    report.samples = samples;
    std::vector<double> z(dim);
    for (long s = 0; s < samples; ++s) {
        const double t = horizon * rng.uniform();
        const double y = y_range * (2.0 * rng.uniform() - 1.0);
        for (double& zk : z) zk = z_range * (2.0 * rng.uniform() - 1.0);
        const double excess = std::abs(driver.f(t, y, z)) - driver.growth_bound(y, norm2(z));
        if (excess > report.max_excess) report.max_excess = excess;
        if (excess > tol) record_worst(report.worst, {t, y, z, excess});
    }
    report.pass = report.max_excess <= tol;
    return report;
}

StructureReport check_driver_structure(const Driver& driver, const L1DriverSpec& spec,
                                       long samples, double y_range, double z_range,
                                       double horizon, SeedSpec seed, int dim, double tol) {
    if (samples < 1) throw std::invalid_argument("check_driver_structure: samples must be >= 1");
    Philox4x32 rng = seed.stream(SeedSpec::kSampling, 3);

    ClauseReport monotone{"monotonicity", true, 0.0, {}};
    ClauseReport lipschitz{"z_lipschitz", true, 0.0, {}};
    ClauseReport holder{"holder_offset", true, 0.0, {}};
    ClauseReport radial{"radial_bound", true, 0.0, {}};
    ClauseReport growth{"growth", true, 0.0, {}};

    std::vector<double> z(dim), z2(dim), zero(dim, 0.0);
    for (long s = 0; s < samples; ++s) {
        const double t = horizon * rng.uniform();
        const double y = y_range * (2.0 * rng.uniform() - 1.0);
        const double y2 = y_range * (2.0 * rng.uniform() - 1.0);
        for (int k = 0; k < dim; ++k) {
            z[k] = z_range * (2.0 * rng.uniform() - 1.0);
            z2[k] = z_range * (2.0 * rng.uniform() - 1.0);
        }
        const double f_yz = driver.f(t, y, z);

        {
            const double dy = y - y2;
            const double e = dy * (f_yz - driver.f(t, y2, z)) - spec.mu * dy * dy;
            if (e > monotone.max_excess) {
                monotone.max_excess = e;
                monotone.worst = {t, y, z, e};
            }
        }
        if (std::isfinite(spec.lip_z)) {
            std::vector<double> dz(dim);
            for (int k = 0; k < dim; ++k) dz[k] = z[k] - z2[k];
            const double e = std::abs(f_yz - driver.f(t, y, z2)) - spec.lip_z * norm(dz);
            if (e > lipschitz.max_excess) {
                lipschitz.max_excess = e;
                lipschitz.worst = {t, y, z, e};
            }
        }
        {
            const double e = std::abs(f_yz - driver.f(t, y, zero)) -
                             spec.delta * std::pow(spec.g0 + std::abs(y) + norm(z), spec.alpha);
            if (e > holder.max_excess) {
                holder.max_excess = e;
                holder.worst = {t, y, z, e};
            }
        }
        {
            const double v = std::abs(driver.f(t, y, zero) - driver.f(t, 0.0, zero));
            if (!std::isfinite(v)) {
                radial.max_excess = std::numeric_limits<double>::infinity();
                radial.worst = {t, y, zero, radial.max_excess};
            }
        }
        {
            const double e = std::abs(f_yz) -
                             spec.c * (1.0 + std::abs(y) + std::pow(norm(z), spec.alpha));
            if (e > growth.max_excess) {
                growth.max_excess = e;
                growth.worst = {t, y, z, e};
            }
        }
    }

    StructureReport report;
    for (ClauseReport* cl : {&monotone, &lipschitz, &holder, &radial, &growth}) {
        cl->pass = cl->max_excess <= tol;
        report.pass = report.pass && cl->pass;
        report.clauses.push_back(*cl);
    }
    return report;
}

}  // namespace qbsde

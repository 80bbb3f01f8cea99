#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qbsde/envelopes.hpp"
#include "qbsde/philox.hpp"

namespace qbsde {

using DriverEnvelope = std::variant<QuadraticEnvelope, SuperlinearEnvelope>;

// Constants for the monotone / Lipschitz / Hoelder structure a sublinear-growth
// driver is declared to satisfy:
//   (y-y')(f(t,y,z)-f(t,y',z)) <= mu |y-y'|^2
//   |f(t,y,z)-f(t,y,z')|       <= lip_z |z-z'|          (inf when not claimed)
//   |f(t,y,z)-f(t,y,0)|        <= delta (g0 + |y| + |z|)^alpha
//   |f(t,y,z)|                 <= c (1 + |y| + |z|^alpha)
struct L1DriverSpec {
    double mu = 0.0;
    double lip_z = 0.0;
    double delta = 1.0;
    double alpha = 0.5;  // in (0, 1)
    double c = 1.0;
    double g0 = 1.0;
};

struct Driver {
    std::string label;
    std::function<double(double t, double y, std::span<const double> z)> f;
    // Optional exact y-derivative; the implicit solver falls back to a
    // difference quotient when absent.
    std::function<double(double t, double y, std::span<const double> z)> dfdy;
    DriverEnvelope envelope;
    std::optional<L1DriverSpec> l1;

    double growth_bound(double y, double z_norm2) const;
    double gamma() const;  // envelope curvature parameter
};

// Catalog of named drivers. Parameters not supplied fall back to the defaults
// listed here; unknown labels or parameters throw ConfigError.
//   zero                              f = 0
//   pure_quadratic   gamma=1          f = (gamma/2)|z|^2
//   linear           beta=1           f = beta * y
//   bounded_quadratic alpha=1 gamma=1 f = alpha + (gamma/2)|z|^2
//   l1_holder        c=1 alpha=0.5    f = c (1 + |y| + |z|^alpha)
//   sqrt_z                            f = |z|^{1/2}
//   l1_dominating    c=1 alpha=0.5    f = 2c (1 + |y| + min(|z|^alpha, |z|))
//   superlinear_log  alpha=1 gamma=1  f = alpha (|y|+e) ln(|y|+e)
Driver make_driver(const std::string& label, const std::map<std::string, double>& params = {});
std::vector<std::string> canonical_driver_labels();

// Dominating driver for the sublinear-growth class: g = 2c(1 + |y| +
// min(|z|^a, |z|)), globally Lipschitz and >= |f| whenever
// |f| <= c(1 + |y| + |z|^a).
Driver dominating_driver(const L1DriverSpec& spec);

struct GrowthWitness {
    double t = 0.0, y = 0.0;
    std::vector<double> z;
    double excess = 0.0;
};

struct GrowthReport {
    bool pass = true;
    double max_excess = 0.0;  // max over samples of |f| - envelope bound
    std::vector<GrowthWitness> worst;
    long samples = 0;
};

// Samples (t, y, z) uniformly on [0,horizon] x [-y_range,y_range] x
// [-z_range,z_range]^dim and reports the largest violation of the declared
// envelope. pass means max_excess <= tol.
GrowthReport validate_growth(const Driver& driver, long samples, double y_range, double z_range,
                             double horizon, SeedSpec seed, int dim = 1, double tol = 1e-12);

struct ClauseReport {
    std::string clause;
    bool pass = true;
    double max_excess = 0.0;
    GrowthWitness worst;
};

struct StructureReport {
    bool pass = true;
    std::vector<ClauseReport> clauses;
};

// Validates the declared L1DriverSpec clause by clause on sampled points.
StructureReport check_driver_structure(const Driver& driver, const L1DriverSpec& spec,
                                       long samples, double y_range, double z_range,
                                       double horizon, SeedSpec seed, int dim = 1,
                                       double tol = 1e-9);

}  // namespace qbsde

#include "qbsde/inf_convolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

struct Candidate {
    double p, q;
    double fval;  // base driver value at (t, p, q)
};

struct QueryKey {
    std::int64_t t, y, z;
    bool operator==(const QueryKey&) const = default;
};

struct QueryKeyHash {
    std::size_t operator()(const QueryKey& k) const {
        std::size_t h = std::hash<std::int64_t>{}(k.t);
        h ^= std::hash<std::int64_t>{}(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<std::int64_t>{}(k.z) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

QueryKey quantize(double t, double y, double z) {
    const double res = 1e9;
    return {static_cast<std::int64_t>(std::llround(t * res)),
            static_cast<std::int64_t>(std::llround(y * res)),
            static_cast<std::int64_t>(std::llround(z * res))};
}

class FamilyCore {
public:
    FamilyCore(Driver base, std::vector<double> ns, InfConvSearch search)
        : base_(std::move(base)), ns_(std::move(ns)), search_(search) {}

    double value(std::size_t member, double t, double y, double z) {
        if (search_.cache_queries) {
            const QueryKey key = quantize(t, y, z);
            const auto it = cache_.find(key);
            if (it != cache_.end()) return it->second[member];
            const std::vector<double> vals = evaluate_all(t, y, z);
            const double out = vals[member];
            cache_.emplace(key, std::move(vals));
            return out;
        }
        return evaluate_all(t, y, z)[member];
    }

private:
    double base_at(double t, double p, double q) const {
        return base_.f(t, p, std::span<const double>(&q, 1));
    }

    static double objective(const Candidate& c, double n, double y, double z) {
        return c.fval + n * (std::abs(c.p - y) + std::abs(c.q - z));
    }

    void add_grid(std::vector<Candidate>& cands, double t, double cy, double cz, double half,
                  int points) const {
        for (int i = 0; i < points; ++i) {
            const double p = cy - half + 2.0 * half * i / (points - 1);
            for (int j = 0; j < points; ++j) {
                const double q = cz - half + 2.0 * half * j / (points - 1);
                cands.push_back({p, q, base_at(t, p, q)});
            }
        }
    }

    // Golden-section on one coordinate of the objective around (p, q).
    template <class F>
    static double golden_min_arg(const F& f, double a, double b) {
        const double inv_phi = 0.6180339887498949;
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while (b - a > 1e-13 * (1.0 + std::abs(a) + std::abs(b))) {
            if (f1 > f2) {
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
        return 0.5 * (a + b);
    }

    std::vector<double> evaluate_all(double t, double y, double z) {
        std::vector<Candidate> cands;
        // The query point itself guarantees f_n <= f.
        cands.push_back({y, z, base_at(t, y, z)});

        double radius = search_.initial_radius;
        int expansions = 0;

        // The coarse box must contain the optimum for the smallest n (largest
        // n values are pulled even closer to the query point). Expand while the
        // smallest-n incumbent sits on the boundary.
        const double n_min = *std::min_element(ns_.begin(), ns_.end());
        for (;; ++expansions) {
            if (expansions > search_.max_expansions) {
                throw DivergingInfimumError(
                    "inf_convolution: objective keeps improving on the search boundary for "
                    "driver '" + base_.label + "'; the penalty does not dominate");
            }
            std::vector<Candidate> coarse;
            add_grid(coarse, t, y, z, radius, search_.coarse_points);
            std::size_t best = 0;
            for (std::size_t i = 1; i < coarse.size(); ++i) {
                if (objective(coarse[i], n_min, y, z) < objective(coarse[best], n_min, y, z)) {
                    best = i;
                }
            }
            const double edge = radius * (1.0 - 1.5 / (search_.coarse_points - 1));
            const bool on_boundary = std::abs(coarse[best].p - y) >= edge ||
                                     std::abs(coarse[best].q - z) >= edge;
            cands.insert(cands.end(), coarse.begin(), coarse.end());
            if (!on_boundary) break;
            radius *= 2.0;
        }

        // Per-member zoom and polish; every candidate feeds the shared pool.
        for (double n : ns_) {
            std::size_t best = 0;
            double best_obj = objective(cands[0], n, y, z);
            for (std::size_t i = 1; i < cands.size(); ++i) {
                const double o = objective(cands[i], n, y, z);
                if (o < best_obj) {
                    best = i;
                    best_obj = o;
                }
            }
            double cp = cands[best].p, cq = cands[best].q;
            double half = radius * search_.zoom_factor;
            for (int round = 0; round < search_.zoom_rounds; ++round) {
                const std::size_t first = cands.size();
                add_grid(cands, t, cp, cq, half, search_.zoom_points);
                std::size_t b = first;
                double bo = objective(cands[first], n, y, z);
                for (std::size_t i = first + 1; i < cands.size(); ++i) {
                    const double o = objective(cands[i], n, y, z);
                    if (o < bo) {
                        b = i;
                        bo = o;
                    }
                }
                cp = cands[b].p;
                cq = cands[b].q;
                half *= search_.zoom_factor;
            }
            // Coordinatewise golden polish around the zoomed point.
            const double h = radius * search_.zoom_factor;
            for (int sweep = 0; sweep < 2; ++sweep) {
                cp = golden_min_arg(
                    [&](double p) { return base_at(t, p, cq) + n * (std::abs(p - y) +
                                                                    std::abs(cq - z)); },
                    cp - h, cp + h);
                cq = golden_min_arg(
                    [&](double q) { return base_at(t, cp, q) + n * (std::abs(cp - y) +
                                                                    std::abs(q - z)); },
                    cq - h, cq + h);
            }
            cands.push_back({cp, cq, base_at(t, cp, cq)});
        }

        // Rank the shared pool under every member objective.
        std::vector<double> values(ns_.size());
        for (std::size_t k = 0; k < ns_.size(); ++k) {
            double best = objective(cands[0], ns_[k], y, z);
            for (std::size_t i = 1; i < cands.size(); ++i) {
                best = std::min(best, objective(cands[i], ns_[k], y, z));
            }
            values[k] = best;
        }
        return values;
    }

    Driver base_;
    std::vector<double> ns_;
    InfConvSearch search_;
    std::unordered_map<QueryKey, std::vector<double>, QueryKeyHash> cache_;
};

}  // namespace

std::vector<Driver> inf_convolution_family(const Driver& base, std::span<const double> ns,
                                           const InfConvSearch& search) {
    if (ns.empty()) throw std::invalid_argument("inf_convolution_family: empty n list");
    for (double n : ns) {
        if (!(n > 0.0)) throw std::invalid_argument("inf_convolution_family: n must be > 0");
    }
    auto core = std::make_shared<FamilyCore>(base, std::vector<double>(ns.begin(), ns.end()),
                                             search);
    std::vector<Driver> family;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        Driver d;
        d.label = base.label + "_lipschitz_" + std::to_string(ns[k]);
        d.envelope = base.envelope;  // f_n <= f pointwise, so the bound carries over
        d.l1 = base.l1;
        d.f = [core, k](double t, double y, std::span<const double> z) {
            if (z.size() != 1) {
                throw std::invalid_argument("inf_convolution: scalar z only");
            }
            return core->value(k, t, y, z[0]);
        };
        family.push_back(std::move(d));
    }
    return family;
}

Driver inf_convolution(const Driver& base, double n, const InfConvSearch& search) {
    return inf_convolution_family(base, std::span(&n, 1), search)[0];
}

}  // namespace qbsde

#include "qbsde/terminal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

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
            throw ConfigError("terminal '" + label + "' does not take parameter '" + key + "'");
        }
    }
}

std::function<double(double)> all_orders() {
    return [](double) { return kInf; };
}

std::vector<double> sorted_unique(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             xs.end());
    return xs;
}

}  // namespace

std::vector<std::string> canonical_terminal_labels() {
    return {"linear", "abs", "square", "plus_abs", "plus_part", "constant"};
}

TerminalFunction make_terminal(const std::string& label,
                               const std::map<std::string, double>& params) {
    TerminalFunction t;
    t.label = label;
    t.integrable = true;

    if (label == "linear") {
        reject_unknown(label, params, {"scale", "shift"});
        const double a = require_param(params, "scale", 1.0);
        const double b = require_param(params, "shift", 0.0);
        if (a == 0.0) throw ConfigError("terminal 'linear' needs scale != 0; use 'constant'");
        t.g = [a, b](double x) { return a * x + b; };
        t.breakpoints = {-b / a};  // zero crossing only; the map itself is smooth
        t.preimages = [a, b](double level) { return std::vector<double>{(level - b) / a}; };
        t.exp_moment_sup = all_orders();
        return t;
    }
    if (label == "abs") {
        reject_unknown(label, params, {});
        t.g = [](double x) { return std::abs(x); };
        t.breakpoints = {0.0};
        t.preimages = [](double level) {
            if (level < 0.0) return std::vector<double>{};
            if (level == 0.0) return std::vector<double>{0.0};
            return std::vector<double>{-level, level};
        };
        t.exp_moment_sup = all_orders();
        return t;
    }
    if (label == "square") {
        reject_unknown(label, params, {});
        t.g = [](double x) { return x * x; };
        t.breakpoints = {0.0};
        t.preimages = [](double level) {
            if (level < 0.0) return std::vector<double>{};
            if (level == 0.0) return std::vector<double>{0.0};
            const double r = std::sqrt(level);
            return std::vector<double>{-r, r};
        };
        // E[e^{lambda B_T^2}] is finite exactly for lambda < 1/(2T).
        t.exp_moment_sup = [](double T) { return 1.0 / (2.0 * T); };
        return t;
    }
    if (label == "plus_abs") {
        reject_unknown(label, params, {});
        t.g = [](double x) { return x + std::abs(x); };
        t.breakpoints = {0.0};
        t.preimages = [](double level) {
            // g vanishes on the whole negative axis; only positive levels
            // have isolated preimages.
            if (level <= 0.0) return std::vector<double>{};
            return std::vector<double>{0.5 * level};
        };
        t.exp_moment_sup = all_orders();
        return t;
    }
    if (label == "plus_part") {
        reject_unknown(label, params, {});
        t.g = [](double x) { return std::max(x, 0.0); };
        t.breakpoints = {0.0};
        t.preimages = [](double level) {
            // g vanishes on the whole negative axis; only positive levels
            // have isolated preimages.
            if (level <= 0.0) return std::vector<double>{};
            return std::vector<double>{level};
        };
        t.exp_moment_sup = all_orders();
        return t;
    }
    if (label == "constant") {
        reject_unknown(label, params, {"value"});
        const double c = require_param(params, "value", 0.0);
        t.g = [c](double) { return c; };
        t.breakpoints = {};
        t.preimages = [](double) { return std::vector<double>{}; };
        t.exp_moment_sup = all_orders();
        return t;
    }
    throw ConfigError("unknown terminal '" + label + "'");
}

TerminalFunction truncate_upper(const TerminalFunction& base, double cap) {
    TerminalFunction t;
    t.label = base.label + "^" + std::to_string(cap);
    const auto g = base.g;
    t.g = [g, cap](double x) { return std::min(g(x), cap); };
    std::vector<double> bps = base.breakpoints;
    for (double x : base.preimages(cap)) bps.push_back(x);
    t.breakpoints = sorted_unique(std::move(bps));
    const auto pre = base.preimages;
    t.preimages = [pre, cap](double level) {
        if (level < cap) return pre(level);
        if (level == cap) return pre(cap);  // corner points; the flat part has none isolated
        return std::vector<double>{};
    };
    // xi^ n <= n caps the positive tail; the negative tail is untouched, so
    // the certificate carries over (it is stated for |xi|).
    t.exp_moment_sup = base.exp_moment_sup;
    t.integrable = base.integrable;
    return t;
}

TerminalFunction truncate_two_sided(const TerminalFunction& base, double upper, double lower) {
    if (upper < 1.0 || lower < 1.0) {
        throw ConfigError("two-sided truncation needs upper >= 1 and lower >= 1");
    }
    TerminalFunction t;
    t.label = base.label + "|[" + std::to_string(-lower) + "," + std::to_string(upper) + "]";
    const auto g = base.g;
    t.g = [g, upper, lower](double x) { return std::clamp(g(x), -lower, upper); };
    std::vector<double> bps = base.breakpoints;
    for (double x : base.preimages(upper)) bps.push_back(x);
    for (double x : base.preimages(-lower)) bps.push_back(x);
    t.breakpoints = sorted_unique(std::move(bps));
    const auto pre = base.preimages;
    t.preimages = [pre, upper, lower](double level) {
        if (level > upper || level < -lower) return std::vector<double>{};
        return pre(level);
    };
    t.exp_moment_sup = all_orders();  // bounded payoff
    t.integrable = true;
    return t;
}

TerminalFunction abs_terminal(const TerminalFunction& base) {
    TerminalFunction t;
    t.label = "|" + base.label + "|";
    const auto g = base.g;
    t.g = [g](double x) { return std::abs(g(x)); };
    t.breakpoints = base.breakpoints;
    const auto pre = base.preimages;
    t.preimages = [pre](double level) {
        if (level < 0.0) return std::vector<double>{};
        std::vector<double> xs = pre(level);
        if (level > 0.0) {
            for (double x : pre(-level)) xs.push_back(x);
        }
        return sorted_unique(std::move(xs));
    };
    t.exp_moment_sup = base.exp_moment_sup;
    t.integrable = base.integrable;
    return t;
}

MomentCheck check_exponential_moment(const TerminalFunction& terminal, double gamma, double beta,
                                     double T) {
    MomentCheck out;
    out.required = gamma * std::exp(beta * T);
    out.available = terminal.exp_moment_sup(T);
    out.ok = out.required < out.available;
    if (!out.ok) {
        out.energy_order = std::numeric_limits<double>::quiet_NaN();
    } else if (out.available == kInf) {
        out.energy_order = out.required + 1.0;
    } else {
        out.energy_order = 0.5 * (out.required + out.available);
    }
    return out;
}

}  // namespace qbsde

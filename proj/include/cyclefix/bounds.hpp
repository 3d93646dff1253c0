#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclefix/errors.hpp"
#include "cyclefix/operator.hpp"
#include "cyclefix/point.hpp"
#include "cyclefix/random.hpp"
#include "cyclefix/util.hpp"

namespace cyclefix {

// Second-order agreement between one relaxed sweep and an explicit Euler step
// of the averaged displacement A = Id - T:
//
//   ||R^eps x - x + eps m A x|| <= eps^2 (3^m - 2m - 1) (||x - z|| + rho)
//
// with rho = max_i ||T_i z - z|| / 2 for any anchor z. For firmly
// nonexpansive T_i (projectors) the constant drops to 2^m - m - 1 at the
// price of 2 rho in place of rho.

inline double general_constant(std::size_t m) {
    return std::pow(3.0, static_cast<double>(m)) - 2.0 * static_cast<double>(m) - 1.0;
}

inline double firm_constant(std::size_t m) {
    return std::pow(2.0, static_cast<double>(m)) - static_cast<double>(m) - 1.0;
}

/// ||R^eps x - x + eps m (x - T x)||
inline double lemma_gap(std::span<const Operator> ops, double eps, const Point& x) {
    if (ops.empty()) throw UsageError("lemma_gap: empty family");
    detail::require_eps(eps, "lemma_gap");
    const double m = static_cast<double>(ops.size());
    const Point r = apply(cycle_of(ops, eps), x);
    const Point a = displacement(average_of(ops), x);
    return norm(r - x + (eps * m) * a);
}

/// rho = max_i ||T_i z - z|| / 2
inline double anchor_spread(std::span<const Operator> ops, const Point& z) {
    double rho = 0.0;
    for (const auto& t : ops) rho = std::max(rho, residual(t, z));
    return rho / 2.0;
}

inline bool all_projections(std::span<const Operator> ops) {
    return std::all_of(ops.begin(), ops.end(), [](const Operator& t) { return t.is_projection(); });
}

inline double lemma_envelope(std::span<const Operator> ops, double eps, const Point& x, const Point& z, bool firm) {
    if (ops.empty()) throw UsageError("lemma_envelope: empty family");
    detail::require_eps(eps, "lemma_envelope");
    if (firm && !all_projections(ops))
        throw UsageError("lemma_envelope: firm bound requested for a family with non-projector members");
    const double rho = anchor_spread(ops, z);
    const double d = dist(x, z);
    const std::size_t m = ops.size();
    return firm ? eps * eps * firm_constant(m) * (d + 2.0 * rho) : eps * eps * general_constant(m) * (d + rho);
}

struct BoundSample {
    double eps = 0.0;
    Point x;
    Point z;
    double lhs = 0.0;
    double rhs_general = 0.0;
    std::optional<double> rhs_firm;
    /// lhs / rhs_general (0 when both vanish).
    double ratio = 0.0;
};

struct BoundViolation {
    std::string family;
    double eps;
    Point x;
    double lhs;
    double rhs;
    bool firm;
};

struct BoundSuiteOptions {
    /// Anchor z; the origin when unset.
    std::optional<Point> z;
    /// Multiplies both envelopes before comparison. Only useful to sabotage
    /// the check in negative-control runs.
    double envelope_factor = 1.0;
    std::size_t threads = 0;
};

struct BoundSuiteResult {
    std::uint64_t seed = 0;
    bool firm_checked = false;
    std::vector<BoundSample> samples;
    double max_ratio = 0.0;
    double max_firm_ratio = 0.0;
    std::vector<BoundViolation> violations;

    bool passed() const { return violations.empty(); }
};

namespace detail {
inline double safe_ratio(double lhs, double rhs) {
    if (rhs > 0.0) return lhs / rhs;
    return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}
} // namespace detail

/// Samples x uniformly in B(0; radius) (sample i drawn from its own seed
/// derived from `seed` and i) and checks both envelopes at every grid eps.
inline BoundSuiteResult bound_check_suite(std::span<const Operator> ops, std::span<const double> eps_grid,
                                          std::size_t n_samples, double radius, std::uint64_t seed,
                                          const BoundSuiteOptions& opt = {}) {
    if (ops.empty()) throw UsageError("bound_check_suite: empty family");
    if (n_samples == 0) throw UsageError("bound_check_suite: need at least one sample");
    if (!(radius >= 0.0)) throw UsageError("bound_check_suite: radius must be nonnegative");
    for (double e : eps_grid) detail::require_eps(e, "bound_check_suite");

    const std::size_t n = [&] {
        // Dimension from the first projector, or from the anchor.
        if (opt.z) return opt.z->dim();
        for (const auto& t : ops)
            if (t.is_projection()) return t.projection_set().dim();
        throw UsageError("bound_check_suite: cannot infer dimension; pass an anchor z");
    }();
    const Point z = opt.z.value_or(Point::zero(n));
    const bool firm = all_projections(ops);
    const std::size_t m = ops.size();
    const double rho = anchor_spread(ops, z);
    const Operator avg = average_of(ops);
    const std::string family = [&] {
        std::string s;
        for (std::size_t i = 0; i < m; ++i) s += (i ? "; " : "") + ops[i].describe();
        return s;
    }();

    BoundSuiteResult out;
    out.seed = seed;
    out.firm_checked = firm;
    out.samples.resize(n_samples * eps_grid.size());
    std::vector<std::vector<BoundViolation>> local(n_samples);

    const std::size_t threads = opt.threads ? opt.threads : default_thread_count();
    parallel_for(n_samples, threads, [&](std::size_t i) {
        Sampler rng(mix_seed(seed, i));
        const Point x = rng.in_ball(Point::zero(n), radius);
        const Point ax = displacement(avg, x);
        const double dxz = dist(x, z);
        for (std::size_t j = 0; j < eps_grid.size(); ++j) {
            const double eps = eps_grid[j];
            BoundSample s;
            s.eps = eps;
            s.x = x;
            s.z = z;
            const Point r = apply(cycle_of(ops, eps), x);
            s.lhs = norm(r - x + (eps * static_cast<double>(m)) * ax);
            s.rhs_general = eps * eps * general_constant(m) * (dxz + rho);
            s.ratio = detail::safe_ratio(s.lhs, s.rhs_general);
            if (s.lhs > opt.envelope_factor * s.rhs_general + 1e-9)
                local[i].push_back({family, eps, x, s.lhs, opt.envelope_factor * s.rhs_general, false});
            if (firm) {
                s.rhs_firm = eps * eps * firm_constant(m) * (dxz + 2.0 * rho);
                if (s.lhs > opt.envelope_factor * *s.rhs_firm + 1e-9)
                    local[i].push_back({family, eps, x, s.lhs, opt.envelope_factor * *s.rhs_firm, true});
            }
            out.samples[i * eps_grid.size() + j] = std::move(s);
        }
    });

    for (const auto& s : out.samples) {
        out.max_ratio = std::max(out.max_ratio, s.ratio);
        if (s.rhs_firm) out.max_firm_ratio = std::max(out.max_firm_ratio, detail::safe_ratio(s.lhs, *s.rhs_firm));
    }
    for (auto& v : local)
        for (auto& e : v) out.violations.push_back(std::move(e));
    return out;
}

/// Log-log slope of lemma_gap(ops, eps, x) over the grid; close to 2 for a
/// point where the second-order term does not vanish.
inline double gap_slope(std::span<const Operator> ops, const Point& x, std::span<const double> eps_grid) {
    std::vector<double> gaps;
    gaps.reserve(eps_grid.size());
    for (double e : eps_grid) gaps.push_back(lemma_gap(ops, e, x));
    return loglog_slope(eps_grid, gaps);
}

} // namespace cyclefix

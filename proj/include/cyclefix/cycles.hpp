#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclefix/errors.hpp"
#include "cyclefix/operator.hpp"
#include "cyclefix/point.hpp"
#include "cyclefix/util.hpp"

namespace cyclefix {

// Under-relaxed periodic iteration y_{k+1} = (Id + eps (T_{k mod m} - Id)) y_k.
// A full sweep over the m operators is one application of R^eps; the limit of
// the sweep endpoints z_k = (R^eps)^k y0 determines the cycle (x_1, ..., x_m).
//
// In R^n the weak limits of the general theory are ordinary limits, so no
// subsequence extraction is done: each eps yields one anchored limit.

struct RunOptions {
    /// Stop once ||z_{k+1} - z_k|| <= tol * eps. Motion per sweep scales
    /// with eps, so an unscaled threshold would stop early for small eps.
    double tol = 1e-10;
    std::size_t max_sweeps = 1'000'000;
    /// ||z_k|| beyond this aborts the run as a suspected empty Fix R^eps.
    double divergence_norm = 1e8;
};

enum class RunStatus { converged, max_sweeps, no_fixed_point_suspected };

inline const char* to_string(RunStatus s) {
    switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_sweeps: return "max-sweeps";
    case RunStatus::no_fixed_point_suspected: return "no-fixed-point suspected";
    }
    return "?";
}

struct CycleResult {
    double eps = 0.0;
    /// x_1, ..., x_m from one recorded sweep after termination.
    std::vector<Point> points;
    Point anchor;
    std::size_t sweeps_used = 0;
    /// ||z_{k+1} - z_k|| at termination.
    double endpoint_residual = 0.0;
    bool converged = false;
    RunStatus status = RunStatus::max_sweeps;
    /// Fejér monotonicity of the recorded tail toward x_m (converged runs).
    bool fejer_monotone = false;

    const Point& endpoint() const { return points.back(); }
};

namespace detail {

inline void require_family(std::span<const Operator> ops, const char* where) {
    if (ops.size() < 2) throw UsageError(std::string(where) + ": need at least two operators");
}

inline Point sweep(std::span<const Operator> ops, double eps, Point y) {
    for (const auto& t : ops) y = relax_step(y, apply(t, y), eps);
    return y;
}

// Sustained outward drift: distance from the anchor sampled at sweep counts
// 2^j keeps increasing without the increments shrinking. A slowly
// converging run shows geometrically shrinking increments instead.
inline bool drifting(const std::vector<double>& checkpoint_dist) {
    constexpr std::size_t kWindow = 4;
    if (checkpoint_dist.size() < kWindow + 2) return false;
    const std::size_t n = checkpoint_dist.size();
    double prev_inc = checkpoint_dist[n - kWindow - 1] - checkpoint_dist[n - kWindow - 2];
    if (!(prev_inc > 0.0)) return false;
    for (std::size_t j = n - kWindow; j < n; ++j) {
        const double inc = checkpoint_dist[j] - checkpoint_dist[j - 1];
        if (!(inc > 0.0) || inc < 0.75 * prev_inc) return false;
        prev_inc = inc;
    }
    return true;
}

} // namespace detail

/// Iterates z_{k+1} = R^eps z_k from y0 until the eps-scaled step test
/// passes, the sweep budget runs out, or the iterates blow up. Exhausting the
/// budget is reported through the result, not thrown.
inline CycleResult run_periodic(std::span<const Operator> ops, double eps, const Point& y0,
                                const RunOptions& opt = {}) {
    detail::require_family(ops, "run_periodic");
    if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("run_periodic: eps must lie in (0, 1]");
    if (!(opt.tol > 0.0)) throw UsageError("run_periodic: tol must be positive");

    constexpr std::size_t kTail = 32;
    constexpr std::size_t kFirstCheckpoint = 1024;

    CycleResult res;
    res.eps = eps;
    res.anchor = y0;

    std::deque<Point> tail;
    std::vector<double> checkpoints;
    Point z = y0;
    double step = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    bool blew_up = false;
    while (k < opt.max_sweeps) {
        Point next = detail::sweep(ops, eps, z);
        ++k;
        step = dist(next, z);
        z = std::move(next);
        tail.push_back(z);
        if (tail.size() > kTail) tail.pop_front();
        if (k >= kFirstCheckpoint && (k & (k - 1)) == 0) checkpoints.push_back(dist(z, y0));
        if (norm(z) > opt.divergence_norm) {
            blew_up = true;
            break;
        }
        if (step <= opt.tol * eps) break;
    }

    res.sweeps_used = k;
    res.endpoint_residual = step;
    res.converged = !blew_up && step <= opt.tol * eps;
    if (res.converged) res.status = RunStatus::converged;
    else if (blew_up || detail::drifting(checkpoints)) res.status = RunStatus::no_fixed_point_suspected;
    else res.status = RunStatus::max_sweeps;

    res.points.reserve(ops.size());
    Point x = z;
    for (const auto& t : ops) {
        x = relax_step(x, apply(t, x), eps);
        res.points.push_back(x);
    }

    if (res.converged) {
        const Point& xm = res.points.back();
        res.fejer_monotone = true;
        for (std::size_t j = 0; j + 1 < tail.size(); ++j)
            if (dist(tail[j + 1], xm) > dist(tail[j], xm) + 1e-9) res.fejer_monotone = false;
    }
    return res;
}

/// The sweep endpoints z_0 = y0, z_1, ..., z_n.
inline std::vector<Point> periodic_orbit(std::span<const Operator> ops, double eps, const Point& y0,
                                         std::size_t n_sweeps) {
    detail::require_family(ops, "periodic_orbit");
    detail::require_eps(eps, "periodic_orbit");
    std::vector<Point> out;
    out.reserve(n_sweeps + 1);
    out.push_back(y0);
    for (std::size_t k = 0; k < n_sweeps; ++k) out.push_back(detail::sweep(ops, eps, out.back()));
    return out;
}

/// (x_1, ..., x_m) of a converged run. With eps = 1 and projectors these
/// satisfy the cyclic system x_i = P_i x_{i-1}.
inline std::vector<Point> extract_cycle(const CycleResult& r) {
    if (!r.converged) throw UsageError("extract_cycle: result did not converge");
    return r.points;
}

struct CycleDiagnostics {
    /// max_i ||x_i - x_{i-1}||, x_0 = x_m.
    double max_adjacent_residual = 0.0;
    /// ||T x_m - x_m|| for the average T.
    double avg_op_residual = 0.0;
    /// (2/m) sum_{i<m} ||x_m - x_i||
    double avg_residual_bound = 0.0;
    /// max_i | ||x_i - x_{i-1}|| - eps ||T_i x_{i-1} - x_{i-1}|| |
    double adjacent_identity_error = 0.0;
    /// || sum_i T_i x_{i-1} - sum_i x_i ||
    double sum_identity_error = 0.0;
    /// max_i ||x_i - (Id + eps (T_i - Id)) x_{i-1}||
    double closure_error = 0.0;

    bool inequality_holds() const { return avg_op_residual <= avg_residual_bound + 1e-9; }
    bool sum_identity_holds() const { return sum_identity_error <= 1e-8; }
    bool adjacent_identity_holds() const { return adjacent_identity_error <= 1e-10; }
    bool closure_holds() const { return closure_error <= 1e-9; }
    bool all_hold() const {
        return inequality_holds() && sum_identity_holds() && adjacent_identity_holds() && closure_holds();
    }
};

inline CycleDiagnostics cycle_diagnostics(const CycleResult& r, std::span<const Operator> ops) {
    if (!r.converged) throw UsageError("cycle_diagnostics: result did not converge");
    if (r.points.size() != ops.size()) throw UsageError("cycle_diagnostics: cycle length differs from family size");
    const std::size_t m = ops.size();
    const auto& x = r.points;
    const auto prev = [&](std::size_t i) -> const Point& { return i == 0 ? x[m - 1] : x[i - 1]; };

    CycleDiagnostics d;
    Eigen::VectorXd sum_t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x[0].dim()));
    Eigen::VectorXd sum_x = sum_t;
    for (std::size_t i = 0; i < m; ++i) {
        const Point ti = apply(ops[i], prev(i));
        const double link = dist(x[i], prev(i));
        d.max_adjacent_residual = std::max(d.max_adjacent_residual, link);
        d.adjacent_identity_error =
            std::max(d.adjacent_identity_error, std::abs(link - r.eps * dist(ti, prev(i))));
        d.closure_error = std::max(d.closure_error, dist(x[i], relax_step(prev(i), ti, r.eps)));
        sum_t += ti.vec();
        sum_x += x[i].vec();
    }
    d.sum_identity_error = (sum_t - sum_x).norm();

    const Point& xm = x[m - 1];
    d.avg_op_residual = residual(average_of(ops), xm);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) s += dist(xm, x[i]);
    d.avg_residual_bound = 2.0 * s / static_cast<double>(m);
    return d;
}

struct SweepRecord {
    CycleResult result;
    std::optional<CycleDiagnostics> diagnostics;
    /// ||x_m^eps - reference||, NaN without a reference point.
    double dist_to_reference = std::numeric_limits<double>::quiet_NaN();
};

struct SweepReport {
    std::vector<double> grid;
    std::vector<SweepRecord> records;
    /// Log-log least-squares slope of the max adjacent residual against eps.
    double residual_slope = std::numeric_limits<double>::quiet_NaN();
    /// sup_eps ||x_m^eps|| over converged entries; an empirical stand-in for
    /// the bound on the fixed-point curve.
    double endpoint_sup_norm = 0.0;
    /// ||x_m^{eps_j} - x_m^{eps_{j-1}}|| between consecutive converged grid
    /// entries (Cauchy check along the grid).
    std::vector<double> endpoint_increments;

    bool all_converged() const {
        for (const auto& r : records)
            if (!r.result.converged) return false;
        return true;
    }
};

struct SweepOptions {
    RunOptions run;
    std::size_t threads = 0; ///< 0: default_thread_count()
    std::optional<Point> reference;
};

inline void validate_grid(std::span<const double> grid) {
    if (grid.empty()) throw UsageError("eps grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0)) throw UsageError("eps grid entries must lie in (0, 1)");
        if (i > 0 && !(grid[i] < grid[i - 1])) throw UsageError("eps grid must be strictly decreasing");
    }
}

/// One anchored run per grid entry. Entries may run concurrently; records are
/// stored in grid order, so the report does not depend on scheduling.
inline SweepReport sweep_epsilon(std::span<const Operator> ops, const Point& y0, std::span<const double> grid,
                                 const SweepOptions& opt = {}) {
    detail::require_family(ops, "sweep_epsilon");
    validate_grid(grid);
    SweepReport rep;
    rep.grid.assign(grid.begin(), grid.end());
    rep.records.resize(grid.size());
    const std::size_t threads = opt.threads ? opt.threads : default_thread_count();
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        SweepRecord rec;
        rec.result = run_periodic(ops, grid[i], y0, opt.run);
        if (rec.result.converged) {
            rec.diagnostics = cycle_diagnostics(rec.result, ops);
            if (opt.reference) rec.dist_to_reference = dist(rec.result.endpoint(), *opt.reference);
        }
        rep.records[i] = std::move(rec);
    });

    std::vector<double> xs, ys;
    const Point* last = nullptr;
    for (const auto& rec : rep.records) {
        if (!rec.result.converged) continue;
        xs.push_back(rec.result.eps);
        ys.push_back(rec.diagnostics->max_adjacent_residual);
        rep.endpoint_sup_norm = std::max(rep.endpoint_sup_norm, norm(rec.result.endpoint()));
        if (last) rep.endpoint_increments.push_back(dist(*last, rec.result.endpoint()));
        last = &rec.result.endpoint();
    }
    rep.residual_slope = loglog_slope(xs, ys);
    return rep;
}

/// Krasnosel'skii-Mann iteration x <- (x + T x) / 2, stopped once
/// ||x - T x|| <= tol. Used as a reference solver for Fix T.
inline Point km_fixed_point(const Operator& t, const Point& y0, double tol = 1e-10,
                            std::size_t max_iters = 10'000'000) {
    if (!(tol > 0.0)) throw UsageError("km_fixed_point: tol must be positive");
    Point x = y0;
    double r = 0.0;
    for (std::size_t k = 0; k <= max_iters; ++k) {
        const Point tx = apply(t, x);
        r = dist(x, tx);
        if (r <= tol) return x;
        if (k == max_iters) break;
        x = lerp(x, tx, 0.5);
    }
    throw NumericalError("km_fixed_point: iteration budget exhausted", x.to_vector(), r);
}

} // namespace cyclefix

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclefix/bounds.hpp"
#include "cyclefix/convex_set.hpp"
#include "cyclefix/cycles.hpp"
#include "cyclefix/errors.hpp"
#include "cyclefix/flow.hpp"
#include "cyclefix/point.hpp"
#include "cyclefix/scenarios.hpp"
#include "cyclefix/util.hpp"

namespace cyclefix::io {

using json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline json point_to_json(const Point& p) {
    json a = json::array();
    for (std::size_t i = 0; i < p.dim(); ++i) a.push_back(p[i]);
    return a;
}

inline Point point_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw UsageError("expected a nonempty array of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw UsageError("expected a number in point array");
        v.push_back(x.get<double>());
    }
    return Point(std::span<const double>(v));
}

namespace detail {
inline double bound_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_null()) throw UsageError("box bound: use \"inf\" or \"-inf\" for unbounded coordinates");
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw UsageError("box bound must be a number, \"inf\" or \"-inf\"");
}

inline json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return v;
}

inline const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw UsageError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

inline double number(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number()) throw UsageError(std::string("field \"") + key + "\" must be a number");
    return v.get<double>();
}
} // namespace detail

/// {"type": "hyperbola", "gamma": 1.0}, {"type": "horizontal_line", "level": 1},
/// {"type": "affine", "anchor": [...], "basis": [[...], ...]},
/// {"type": "halfspace", "normal": [...], "offset": b},
/// {"type": "box", "lower": [...], "upper": [...]}, {"type": "ball", "center": [...], "radius": r},
/// {"type": "parabola_cap"}
inline ConvexSet set_from_json(const json& j) {
    if (!j.is_object()) throw UsageError("set must be a JSON object");
    const auto type = detail::field(j, "type").get<std::string>();
    if (type == "horizontal_line") return ConvexSet::horizontal_line(detail::number(j, "level"));
    if (type == "hyperbola") return ConvexSet::hyperbola_region(detail::number(j, "gamma"));
    if (type == "parabola_cap") return ConvexSet::parabola_cap();
    if (type == "ball") return ConvexSet::ball(point_from_json(detail::field(j, "center")), detail::number(j, "radius"));
    if (type == "halfspace")
        return ConvexSet::halfspace(point_from_json(detail::field(j, "normal")), detail::number(j, "offset"));
    if (type == "affine") {
        std::vector<Point> basis;
        if (j.contains("basis"))
            for (const auto& b : j.at("basis")) basis.push_back(point_from_json(b));
        return ConvexSet::affine_subspace(point_from_json(detail::field(j, "anchor")), basis);
    }
    if (type == "box") {
        std::vector<double> lo, hi;
        for (const auto& b : detail::field(j, "lower")) lo.push_back(detail::bound_from_json(b));
        for (const auto& b : detail::field(j, "upper")) hi.push_back(detail::bound_from_json(b));
        return ConvexSet::box(lo, hi);
    }
    throw UsageError("unknown set type \"" + type + "\"");
}

inline json set_to_json(const ConvexSet& s) {
    return std::visit(
        [](const auto& v) -> json {
            using S = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<S, sets::HorizontalLine>) return {{"type", "horizontal_line"}, {"level", v.level}};
            else if constexpr (std::is_same_v<S, sets::HyperbolaRegion>) return {{"type", "hyperbola"}, {"gamma", v.gamma}};
            else if constexpr (std::is_same_v<S, sets::ParabolaCap2D>) return {{"type", "parabola_cap"}};
            else if constexpr (std::is_same_v<S, sets::Ball>)
                return {{"type", "ball"}, {"center", point_to_json(v.center)}, {"radius", v.radius}};
            else if constexpr (std::is_same_v<S, sets::Halfspace>)
                return {{"type", "halfspace"}, {"normal", point_to_json(v.normal)}, {"offset", v.offset}};
            else if constexpr (std::is_same_v<S, sets::AffineSubspace>) {
                json basis = json::array();
                for (Eigen::Index c = 0; c < v.basis.cols(); ++c)
                    basis.push_back(point_to_json(Point(Eigen::VectorXd(v.basis.col(c)))));
                return {{"type", "affine"}, {"anchor", point_to_json(v.anchor)}, {"basis", basis}};
            } else {
                json lo = json::array(), hi = json::array();
                for (Eigen::Index i = 0; i < v.lower.size(); ++i) {
                    lo.push_back(detail::bound_to_json(v.lower(i)));
                    hi.push_back(detail::bound_to_json(v.upper(i)));
                }
                return {{"type", "box"}, {"lower", lo}, {"upper", hi}};
            }
        },
        s.variant());
}

inline std::vector<double> grid_from_json(const json& j) {
    std::vector<double> g;
    for (const auto& e : j) g.push_back(e.get<double>());
    return g;
}

/// Scenario file: {"name": ..., "sets": [...], "y0": [...], "eps_grid": [...], "seed": n}.
/// Alternatively {"builder": "hyperbola" | "parabola" | "parallel-lines" | "affine-regular", ...parameters}.
/// A plain two-set file goes through the two-set builder so that its closed
/// form is available; larger families carry no predictions.
inline Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw UsageError("scenario file must hold a JSON object");
    const auto opt_y0 = [&](Point fallback) { return j.contains("y0") ? point_from_json(j.at("y0")) : fallback; };
    Scenario s;
    if (j.contains("builder")) {
        const auto b = j.at("builder").get<std::string>();
        if (b == "hyperbola") {
            s = build_hyperbola_example(detail::number(j, "alpha"), detail::number(j, "beta"),
                                        j.value("gamma", 1.0), opt_y0(Point{0.0, 0.0}));
        } else if (b == "parabola") {
            s = build_parabola_counterexample(opt_y0(Point{0.0, 1.0}));
        } else if (b == "parallel-lines") {
            s = build_parallel_lines(opt_y0(Point{0.0, 0.0}));
        } else if (b == "affine-regular") {
            const auto n = j.value("n", std::size_t{8});
            const auto dims = j.value("dims", std::vector<std::size_t>{5, 5, 5});
            std::vector<Point> shifts;
            if (j.contains("shifts"))
                for (const auto& p : j.at("shifts")) shifts.push_back(point_from_json(p));
            s = build_affine_regular(n, dims, shifts, opt_y0(Point::zero(n)), j.value("seed", std::uint64_t{0}));
        } else {
            throw UsageError("unknown builder \"" + b + "\"");
        }
    } else {
        std::vector<ConvexSet> sets;
        for (const auto& e : detail::field(j, "sets")) sets.push_back(set_from_json(e));
        if (sets.size() < 2) throw UsageError("scenario needs at least two sets");
        Point y0 = point_from_json(detail::field(j, "y0"));
        const bool all_affine = std::all_of(sets.begin(), sets.end(), [](const ConvexSet& c) {
            return std::holds_alternative<sets::AffineSubspace>(c.variant());
        });
        if (sets.size() == 2) {
            s = build_two_set_example(sets[0], sets[1], std::move(y0));
        } else if (all_affine) {
            s = build_affine_family(std::move(sets), std::move(y0));
        } else {
            s.sets = std::move(sets);
            s.operators = projectors(s.sets);
            s.y0 = std::move(y0);
            s.eps_grid = default_eps_grid();
        }
    }
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("eps_grid")) s.eps_grid = grid_from_json(j.at("eps_grid"));
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& set : s.sets)
        if (set.dim() != s.y0.dim()) throw UsageError("scenario: set dimension differs from y0");
    return s;
}

inline json scenario_to_json(const Scenario& s) {
    json sets = json::array();
    for (const auto& c : s.sets) sets.push_back(set_to_json(c));
    json g = json::array();
    for (double e : s.eps_grid) g.push_back(e);
    return {{"name", s.name}, {"sets", sets}, {"y0", point_to_json(s.y0)}, {"eps_grid", g}, {"seed", s.seed}};
}

// ---------------------------------------------------------------------------
// Reports. Every artifact carries the tool version, the seed and the full
// configuration. CSV files open with '#' metadata lines followed by the
// header row.

struct ReportMeta {
    std::string command;
    std::uint64_t seed = 0;
    json config = json::object();
    bool failed = false;
    std::vector<std::string> failures;
};

inline json envelope(const ReportMeta& meta, json data) {
    json f = json::array();
    for (const auto& s : meta.failures) f.push_back(s);
    return {{"tool", "cyclefix"},
            {"version", kVersion},
            {"command", meta.command},
            {"seed", meta.seed},
            {"config", meta.config},
            {"status", meta.failed ? "failed" : "ok"},
            {"failures", f},
            {"data", std::move(data)}};
}

inline std::string csv_preamble(const ReportMeta& meta) {
    std::string s = "# tool=cyclefix version=" + std::string(kVersion) + " command=" + meta.command +
                    " seed=" + std::to_string(meta.seed) + " status=" + (meta.failed ? "failed" : "ok") + "\n";
    s += "# config=" + meta.config.dump() + "\n";
    for (const auto& f : meta.failures) s += "# failure=" + f + "\n";
    return s;
}

/// Table bodies below hold the header row and the data rows; prepend
/// csv_preamble() when writing a file.

/// Optional extra per-row values of a sweep table.
struct SweepRowExtras {
    std::vector<double> prediction_error; ///< NaN where no prediction applies
};

inline std::string sweep_csv(const SweepReport& rep, const SweepRowExtras& extra = {}) {
    std::string s;
    const std::size_t n = rep.records.empty() ? 0 : rep.records.front().result.anchor.dim();
    s += "eps,sweeps,endpoint_residual,max_adjacent_residual,avg_op_residual,dist_to_reference,converged,status,"
         "prediction_error";
    for (std::size_t i = 0; i < n; ++i) s += ",endpoint_" + std::to_string(i + 1);
    s += "\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < rep.records.size(); ++r) {
        const auto& rec = rep.records[r];
        const auto& res = rec.result;
        s += fmt(res.eps) + "," + std::to_string(res.sweeps_used) + "," + fmt(res.endpoint_residual) + "," +
             fmt(rec.diagnostics ? rec.diagnostics->max_adjacent_residual : nan) + "," +
             fmt(rec.diagnostics ? rec.diagnostics->avg_op_residual : nan) + "," + fmt(rec.dist_to_reference) + "," +
             (res.converged ? "true" : "false") + "," + to_string(res.status) + "," +
             fmt(r < extra.prediction_error.size() ? extra.prediction_error[r] : nan);
        for (std::size_t i = 0; i < n; ++i) s += "," + fmt(res.endpoint()[i]);
        s += "\n";
    }
    return s;
}

inline json diagnostics_json(const CycleDiagnostics& d) {
    return {{"max_adjacent_residual", d.max_adjacent_residual},
            {"avg_op_residual", d.avg_op_residual},
            {"avg_residual_bound", d.avg_residual_bound},
            {"adjacent_identity_error", d.adjacent_identity_error},
            {"sum_identity_error", d.sum_identity_error},
            {"closure_error", d.closure_error},
            {"all_hold", d.all_hold()}};
}

inline json cycle_json(const CycleResult& r) {
    json pts = json::array();
    for (const auto& p : r.points) pts.push_back(point_to_json(p));
    return {{"eps", r.eps},
            {"sweeps", r.sweeps_used},
            {"endpoint_residual", r.endpoint_residual},
            {"converged", r.converged},
            {"status", to_string(r.status)},
            {"fejer_monotone", r.fejer_monotone},
            {"anchor", point_to_json(r.anchor)},
            {"cycle", pts}};
}

inline json sweep_json(const SweepReport& rep, const SweepRowExtras& extra = {}) {
    json rows = json::array();
    for (std::size_t r = 0; r < rep.records.size(); ++r) {
        const auto& rec = rep.records[r];
        json row = cycle_json(rec.result);
        row["diagnostics"] = rec.diagnostics ? diagnostics_json(*rec.diagnostics) : json(nullptr);
        row["dist_to_reference"] = rec.dist_to_reference;
        row["prediction_error"] =
            r < extra.prediction_error.size() ? json(extra.prediction_error[r]) : json(nullptr);
        rows.push_back(std::move(row));
    }
    json inc = json::array();
    for (double v : rep.endpoint_increments) inc.push_back(v);
    return {{"records", rows},
            {"residual_slope", rep.residual_slope},
            {"endpoint_sup_norm", rep.endpoint_sup_norm},
            {"endpoint_increments", inc}};
}

inline std::string bounds_csv(const BoundSuiteResult& res) {
    std::string s = "eps,norm_x,lhs,rhs,ratio,rhs_firm\n";
    for (const auto& b : res.samples) {
        s += fmt(b.eps) + "," + fmt(norm(b.x)) + "," + fmt(b.lhs) + "," + fmt(b.rhs_general) + "," + fmt(b.ratio) +
             "," + fmt(b.rhs_firm.value_or(std::numeric_limits<double>::quiet_NaN())) + "\n";
    }
    return s;
}

inline json bounds_json(const BoundSuiteResult& res) {
    json viol = json::array();
    for (std::size_t i = 0; i < res.violations.size() && i < 20; ++i) {
        const auto& v = res.violations[i];
        viol.push_back({{"family", v.family},
                        {"eps", v.eps},
                        {"x", point_to_json(v.x)},
                        {"lhs", v.lhs},
                        {"rhs", v.rhs},
                        {"firm", v.firm}});
    }
    return {{"samples", res.samples.size()},
            {"max_ratio", res.max_ratio},
            {"max_firm_ratio", res.firm_checked ? json(res.max_firm_ratio) : json(nullptr)},
            {"firm_checked", res.firm_checked},
            {"violation_count", res.violations.size()},
            {"violations", viol},
            {"passed", res.passed()}};
}

inline std::string trajectory_csv(const FlowTrajectory& tr) {
    std::string s;
    const std::size_t n = tr.states.empty() ? 0 : tr.states.front().dim();
    s += "t";
    for (std::size_t i = 0; i < n; ++i) s += ",x_" + std::to_string(i + 1);
    s += "\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        s += fmt(tr.times[k]);
        for (std::size_t i = 0; i < n; ++i) s += "," + fmt(tr.states[k][i]);
        s += "\n";
    }
    return s;
}

} // namespace cyclefix::io

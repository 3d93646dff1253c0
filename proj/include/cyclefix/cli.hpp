#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyclefix/bounds.hpp"
#include "cyclefix/cycles.hpp"
#include "cyclefix/errors.hpp"
#include "cyclefix/flow.hpp"
#include "cyclefix/io.hpp"
#include "cyclefix/scenarios.hpp"
#include "cyclefix/util.hpp"

namespace cyclefix::cli {

using io::json;

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kUsage = 2, kNumerical = 3 };

struct Tolerances {
    double run_tol = 1e-10;
    std::size_t max_sweeps = 1'000'000;
    /// Allowed distance between an iterated endpoint and its closed form.
    double prediction_tol = 1e-8;
};

struct RunConfig {
    std::string command;
    std::optional<std::string> scenario_name;
    std::optional<std::string> scenario_file;
    // Builder parameters.
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 1.0;
    std::vector<double> y0;
    std::size_t n = 8;
    std::vector<std::size_t> dims{5, 5, 5};

    std::optional<double> eps;
    std::vector<double> eps_grid;
    std::string out = "-";
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_given = false;
    Tolerances tol;

    // bounds
    std::size_t samples = 1000;
    double radius = 5.0;
    double envelope_factor = 1.0;
    // flow-compare
    double t_end = 3.0;
    double h = 1e-3;
    std::optional<std::string> trajectory_out;
    // stability
    std::vector<double> z;

    json to_json() const {
        json j;
        j["command"] = command;
        j["scenario"] = scenario_name ? json(*scenario_name) : json(nullptr);
        j["scenario_file"] = scenario_file ? json(*scenario_file) : json(nullptr);
        if (scenario_name) {
            if (*scenario_name == "hyperbola") j["params"] = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}};
            else if (*scenario_name == "affine") j["params"] = {{"n", n}, {"dims", dims}};
            else j["params"] = json::object();
        }
        j["y0"] = y0;
        j["eps"] = eps ? json(*eps) : json(nullptr);
        j["eps_grid"] = eps_grid;
        j["out"] = out;
        j["format"] = format;
        j["seed"] = seed;
        j["tolerances"] = {{"run_tol", tol.run_tol},
                           {"max_sweeps", tol.max_sweeps},
                           {"prediction_tol", tol.prediction_tol}};
        if (command == "bounds")
            j["bounds"] = {{"samples", samples}, {"radius", radius}, {"envelope_factor", envelope_factor}};
        if (command == "flow-compare")
            j["flow"] = {{"t_end", t_end},
                         {"h", h},
                         {"trajectory_out", trajectory_out ? json(*trajectory_out) : json(nullptr)}};
        if (command == "stability") j["z"] = z;
        return j;
    }
};

/// --help was requested; carries the help text.
struct HelpRequested {
    std::string text;
};

namespace detail {

inline void check_writable_target(const std::string& path, const char* flag) {
    if (path == "-") return;
    const auto parent = std::filesystem::path(path).parent_path();
    const auto dir = parent.empty() ? std::filesystem::path(".") : parent;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw UsageError(std::string(flag) + ": directory '" + dir.string() + "' does not exist");
}

} // namespace detail

/// argv without the program name. Throws UsageError on invalid input and
/// HelpRequested for --help.
inline RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig c;
    CLI::App app{"Under-relaxed cyclic compositions of nonexpansive operators", "cyclefix"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kVersion));

    std::string scenario_name, scenario_file, trajectory_out;
    double eps = 0.0;

    const auto add_common = [&](CLI::App* sub) {
        auto* sn = sub->add_option("--scenario", scenario_name, "built-in scenario")
                       ->check(CLI::IsMember({"hyperbola", "parabola", "parallel-lines", "affine"}));
        auto* sf = sub->add_option("--scenario-file", scenario_file, "scenario JSON file");
        sn->excludes(sf);
        sub->add_option("--alpha", c.alpha, "hyperbola: level of the first line");
        sub->add_option("--beta", c.beta, "hyperbola: level of the second line");
        sub->add_option("--gamma", c.gamma, "hyperbola: s t >= gamma");
        sub->add_option("--y0", c.y0, "starting point, comma separated")->delimiter(',');
        sub->add_option("--n", c.n, "affine: ambient dimension");
        sub->add_option("--dims", c.dims, "affine: subspace dimensions, comma separated")->delimiter(',');
        sub->add_option("--eps-grid", c.eps_grid, "relaxation grid, comma separated")->delimiter(',');
        sub->add_option("--out", c.out, "output path, '-' for stdout");
        sub->add_option("--format", c.format, "csv or json (default from --out extension)")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", c.seed, "random seed");
        sub->add_option("--tol", c.tol.run_tol, "stopping tolerance per unit eps")->check(CLI::PositiveNumber);
        sub->add_option("--max-sweeps", c.tol.max_sweeps, "sweep budget per run")->check(CLI::PositiveNumber);
        sub->add_option("--prediction-tol", c.tol.prediction_tol, "closed-form agreement tolerance")
            ->check(CLI::PositiveNumber);
    };

    auto* run = app.add_subcommand("run", "iterate one relaxation parameter to its cycle");
    add_common(run);
    run->add_option("--eps", eps, "relaxation parameter in (0, 1]");

    auto* sweep = app.add_subcommand("sweep", "cycles over an eps grid");
    add_common(sweep);

    auto* bounds = app.add_subcommand("bounds", "sampled check of the second-order sweep bound");
    add_common(bounds);
    bounds->add_option("--samples", c.samples, "points per family")->check(CLI::PositiveNumber);
    bounds->add_option("--radius", c.radius, "sampling radius")->check(CLI::NonNegativeNumber);
    bounds->add_option("--envelope-factor", c.envelope_factor)->group("");

    auto* flow = app.add_subcommand("flow-compare", "interpolated sweeps against the continuous flow");
    add_common(flow);
    flow->add_option("--t-end", c.t_end, "time horizon")->check(CLI::PositiveNumber);
    flow->add_option("--step", c.h, "integrator step")->check(CLI::PositiveNumber);
    flow->add_option("--trajectory", trajectory_out, "also write the flow trajectory as CSV");

    auto* stab = app.add_subcommand("stability", "distance from z to the fixed points of the sweep map");
    add_common(stab);
    stab->add_option("--z", c.z, "test point, comma separated")->delimiter(',');

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        throw HelpRequested{subs.empty() ? app.help() : subs.front()->help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::Success&) {
        throw HelpRequested{app.version()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->get_subcommands().size() > 0) throw UsageError("unexpected nested subcommand");
    c.command = sub->get_name();
    const auto given = [sub](const char* flag) {
        const auto* o = sub->get_option_no_throw(flag);
        return o != nullptr && o->count() > 0;
    };
    const bool has_name = given("--scenario");
    const bool has_file = given("--scenario-file");
    if (has_name == has_file) throw UsageError("exactly one of --scenario or --scenario-file is required");
    if (has_name) c.scenario_name = scenario_name;
    if (has_file) c.scenario_file = scenario_file;
    c.seed_given = given("--seed");
    if (c.command == "run" && given("--eps")) {
        if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("--eps must lie in (0, 1]");
        c.eps = eps;
    }
    if (given("--trajectory")) {
        c.trajectory_out = trajectory_out;
        detail::check_writable_target(trajectory_out, "--trajectory");
    }
    if (!given("--format")) {
        const auto ext = std::filesystem::path(c.out).extension().string();
        c.format = ext == ".json" ? "json" : "csv";
    }
    if (c.command == "flow-compare" && !(c.t_end >= c.h)) throw UsageError("--t-end must be at least --h");
    if (c.command == "bounds") {
        for (double e : c.eps_grid)
            if (!(e > 0.0 && e <= 1.0)) throw UsageError("--eps-grid entries must lie in (0, 1]");
    } else if (!c.eps_grid.empty()) {
        validate_grid(c.eps_grid);
    }
    if (c.command == "stability" && given("--z") && c.z.empty()) throw UsageError("--z is empty");
    detail::check_writable_target(c.out, "--out");
    return c;
}

/// Scenario from the configured source. Builder flags override file fields
/// only for the starting point and the grid.
inline Scenario build_scenario(RunConfig& c) {
    Scenario s;
    if (c.scenario_file) {
        std::ifstream in(*c.scenario_file);
        if (!in) throw UsageError("cannot open scenario file '" + *c.scenario_file + "'");
        json j;
        try {
            j = json::parse(in);
            s = io::scenario_from_json(j);
        } catch (const json::exception& e) {
            throw UsageError("scenario file '" + *c.scenario_file + "': " + e.what());
        }
        if (!c.seed_given) c.seed = s.seed;
        if (!c.y0.empty()) {
            if (c.y0.size() != s.dim()) throw UsageError("--y0 dimension differs from the scenario");
            s.y0 = Point(std::span<const double>(c.y0));
        }
        return s;
    }
    const auto y0_or = [&](Point fallback) {
        return c.y0.empty() ? fallback : Point(std::span<const double>(c.y0));
    };
    const std::string& name = *c.scenario_name;
    if (name == "hyperbola") s = build_hyperbola_example(c.alpha, c.beta, c.gamma, y0_or(Point{0.0, 0.0}));
    else if (name == "parabola") s = build_parabola_counterexample(y0_or(Point{0.0, 1.0}));
    else if (name == "parallel-lines") s = build_parallel_lines(y0_or(Point{0.0, 0.0}));
    else if (name == "affine") s = build_affine_regular(c.n, c.dims, {}, y0_or(Point::zero(c.n)), c.seed);
    else throw UsageError("unknown scenario '" + name + "'");
    s.seed = c.seed;
    return s;
}

/// Report under construction; whatever was filled in is written even when a
/// command stops on a numerical failure.
struct Report {
    io::ReportMeta meta;
    json data = json::object();
    std::string csv_body;

    void fail(std::string why) {
        meta.failed = true;
        meta.failures.push_back(std::move(why));
    }
};

namespace detail {

inline RunOptions run_options(const RunConfig& c) {
    RunOptions o;
    o.tol = c.tol.run_tol;
    o.max_sweeps = c.tol.max_sweeps;
    return o;
}

inline std::vector<double> grid_or(const RunConfig& c, std::vector<double> fallback) {
    return c.eps_grid.empty() ? fallback : c.eps_grid;
}

/// Prediction errors and verification failures for a set of records.
inline io::SweepRowExtras verify_records(const Scenario& s, const SweepReport& rep, double tol, Report& out) {
    io::SweepRowExtras extra;
    for (const auto& rec : rep.records) {
        const auto& r = rec.result;
        const PredictionCheck pc = check_prediction(s, r, tol);
        extra.prediction_error.push_back(pc.checked && r.converged ? pc.error
                                                                   : std::numeric_limits<double>::quiet_NaN());
        if (pc.checked && !pc.ok)
            out.fail("eps=" + io::fmt(r.eps) + ": prediction mismatch (" + pc.what + ", error " +
                     io::fmt(pc.error) + ", status " + to_string(r.status) + ")");
        if (rec.diagnostics && !rec.diagnostics->all_hold())
            out.fail("eps=" + io::fmt(r.eps) + ": cycle identity or inequality violated");
    }
    return extra;
}

inline void cmd_run(RunConfig& c, const Scenario& s, Report& out) {
    const double eps = c.eps.value_or(s.eps_grid.front());
    SweepReport rep;
    rep.grid = {eps};
    SweepRecord rec;
    rec.result = run_periodic(s.operators, eps, s.y0, run_options(c));
    if (rec.result.converged) {
        rec.diagnostics = cycle_diagnostics(rec.result, s.operators);
        if (s.reference) rec.dist_to_reference = dist(rec.result.endpoint(), *s.reference);
    }
    rep.records.push_back(std::move(rec));
    const auto extra = verify_records(s, rep, c.tol.prediction_tol, out);
    out.data = io::sweep_json(rep, extra);
    out.csv_body = io::sweep_csv(rep, extra);
}

inline void cmd_sweep(RunConfig& c, const Scenario& s, Report& out) {
    const auto grid = grid_or(c, s.eps_grid);
    SweepOptions opt;
    opt.run = run_options(c);
    opt.reference = s.reference;
    const SweepReport rep = sweep_epsilon(s.operators, s.y0, grid, opt);
    const auto extra = verify_records(s, rep, c.tol.prediction_tol, out);
    out.data = io::sweep_json(rep, extra);
    out.data["predicted_limit"] = s.predicted_limit ? io::point_to_json(*s.predicted_limit) : json(nullptr);
    out.csv_body = io::sweep_csv(rep, extra);
}

inline void cmd_bounds(RunConfig& c, const Scenario& s, Report& out) {
    const auto grid = grid_or(c, {1.0, 0.5, 0.1, 0.01});
    BoundSuiteOptions opt;
    opt.z = s.reference.value_or(Point::zero(s.dim()));
    opt.envelope_factor = c.envelope_factor;
    const BoundSuiteResult res = bound_check_suite(s.operators, grid, c.samples, c.radius, c.seed, opt);
    out.data = io::bounds_json(res);
    out.data["anchor"] = io::point_to_json(*opt.z);
    out.csv_body = io::bounds_csv(res);
    if (!res.passed())
        out.fail(std::to_string(res.violations.size()) + " bound violations (max ratio " + io::fmt(res.max_ratio) +
                 ")");
}

inline void cmd_flow(RunConfig& c, const Scenario& s, Report& out) {
    const auto grid = grid_or(c, dyadic_grid(3, 8));
    const double m = static_cast<double>(s.m());
    std::vector<double> devs;
    json rows = json::array();
    out.csv_body = "eps,sweeps,step,deviation,deviation_over_eps\n";
    for (double eps : grid) {
        const auto sweeps = static_cast<std::size_t>(std::ceil(c.t_end / (m * eps) - 1e-9));
        const Interpolant psi(periodic_orbit(s.operators, eps, s.y0, sweeps), eps, s.m());
        // Integrator error stays well below the O(eps) deviation.
        const FlowTrajectory traj = integrate_flow(s.average(), s.y0, c.t_end, std::min(c.h, eps / 10.0));
        const double d = flow_deviation(psi, traj, c.t_end);
        devs.push_back(d);
        rows.push_back({{"eps", eps},
                        {"sweeps", sweeps},
                        {"step", traj.step},
                        {"deviation", d},
                        {"deviation_over_eps", d / eps}});
        out.csv_body += io::fmt(eps) + "," + std::to_string(sweeps) + "," + io::fmt(traj.step) + "," + io::fmt(d) +
                        "," + io::fmt(d / eps) + "\n";
        out.data["records"] = rows;
    }
    const double slope = loglog_slope(grid, devs);
    double gamma_hat = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) gamma_hat = std::max(gamma_hat, devs[i] / (grid[i] * c.t_end));
    const FlowTrajectory traj = integrate_flow(s.average(), s.y0, c.t_end, c.h);
    out.data["slope"] = slope;
    out.data["gamma_hat"] = gamma_hat;
    out.data["flow_endpoint"] = io::point_to_json(traj.states.back());
    out.data["step"] = traj.step;
    if (s.strong_monotonicity && s.predicted_limit) {
        const bool ok = decay_check(traj, *s.predicted_limit, *s.strong_monotonicity, s.monotonicity_radius);
        out.data["decay_check"] = ok;
        if (!ok) out.fail("flow does not decay at the strong-monotonicity rate");
    } else {
        out.data["decay_check"] = nullptr;
    }
    if (c.trajectory_out) {
        io::ReportMeta tm = out.meta;
        tm.failed = false;
        tm.failures.clear();
        std::ofstream f(*c.trajectory_out, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + *c.trajectory_out + "'");
        f << io::csv_preamble(tm) << io::trajectory_csv(traj);
    }
}

inline void cmd_stability(RunConfig& c, const Scenario& s, Report& out) {
    const auto grid = grid_or(c, s.eps_grid);
    Point z = !c.z.empty() ? Point(std::span<const double>(c.z))
              : s.slice    ? parabola_stability_witness()
                           : s.reference.value_or(s.y0);
    if (z.dim() != s.dim() && !(s.slice && z.dim() == s.slice->ambient_dim))
        throw UsageError("--z dimension differs from the scenario");
    out.data["z"] = io::point_to_json(z);
    json rows = json::array();
    out.csv_body = "eps,gap,bound\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double eps : grid) {
        const double gap = stability_gap(s, z, eps, c.tol.run_tol, c.tol.max_sweeps);
        double bound = nan;
        if (s.predict) bound = s.predict(eps).fix_distance_bound.value_or(nan);
        rows.push_back({{"eps", eps}, {"gap", gap}, {"bound", std::isnan(bound) ? json(nullptr) : json(bound)}});
        out.csv_body += io::fmt(eps) + "," + io::fmt(gap) + "," + io::fmt(bound) + "\n";
        out.data["records"] = rows;
    }
}

inline void write_report(const RunConfig& c, const Report& r, std::ostream& stdout_stream) {
    std::string text = c.format == "json" ? io::envelope(r.meta, r.data).dump(2) + "\n"
                                          : io::csv_preamble(r.meta) + r.csv_body;
    if (c.out == "-") {
        stdout_stream << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + c.out + "'");
    f << text;
}

} // namespace detail

/// Runs the configured command and writes its report. Returns the exit code.
inline int execute(RunConfig c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Report rep;
    try {
        const Scenario s = build_scenario(c);
        rep.meta.command = c.command;
        rep.meta.seed = c.seed;
        rep.meta.config = c.to_json();
        rep.meta.config["scenario_name"] = s.name;
        int code = kOk;
        try {
            if (c.command == "run") detail::cmd_run(c, s, rep);
            else if (c.command == "sweep") detail::cmd_sweep(c, s, rep);
            else if (c.command == "bounds") detail::cmd_bounds(c, s, rep);
            else if (c.command == "flow-compare") detail::cmd_flow(c, s, rep);
            else if (c.command == "stability") detail::cmd_stability(c, s, rep);
            else throw UsageError("unknown command '" + c.command + "'");
            if (rep.meta.failed) code = kVerificationFailed;
        } catch (const NumericalError& e) {
            rep.fail(std::string("numerical failure: ") + e.what());
            code = kNumerical;
        }
        detail::write_report(c, rep, out);
        for (const auto& f : rep.meta.failures) err << "cyclefix: " << f << "\n";
        return code;
    } catch (const UsageError& e) {
        err << "cyclefix: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        err << "cyclefix: numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
}

/// Full entry point: parse, execute, map errors to exit codes.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    RunConfig c;
    try {
        c = parse_config(args);
    } catch (const HelpRequested& h) {
        out << h.text;
        if (!h.text.empty() && h.text.back() != '\n') out << "\n";
        return kOk;
    } catch (const UsageError& e) {
        err << "cyclefix: " << e.what() << "\nRun 'cyclefix --help' for usage.\n";
        return kUsage;
    }
    return execute(std::move(c), out, err);
}

} // namespace cyclefix::cli

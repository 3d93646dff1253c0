#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cyclefix/convex_set.hpp"
#include "cyclefix/cycles.hpp"
#include "cyclefix/errors.hpp"
#include "cyclefix/operator.hpp"
#include "cyclefix/point.hpp"
#include "cyclefix/random.hpp"
#include "cyclefix/util.hpp"

namespace cyclefix {

/// Closed-form facts about Fix R^eps for one eps.
struct Prediction {
    /// Fix R^eps is empty.
    bool fix_empty = false;
    /// A point of Fix R^eps.
    std::optional<Point> fixed_point;
    /// Fix R^eps = {fixed_point}; any converged run must end there.
    bool unique = false;
    /// (coordinate index, value) shared by every point of Fix R^eps.
    std::optional<std::pair<std::size_t, double>> coordinate;
    /// Upper bound on d(reference, Fix R^eps).
    std::optional<double> fix_distance_bound;
};

/// Maps ambient points to a coordinate slice that the iteration preserves.
/// Coordinates not kept are carried as an orthogonal offset.
struct SliceEmbedding {
    std::size_t ambient_dim;
    std::vector<std::size_t> kept;

    Point to_slice(const Point& ambient) const {
        if (ambient.dim() != ambient_dim) throw UsageError("slice: ambient dimension mismatch");
        Eigen::VectorXd v(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) v(static_cast<Eigen::Index>(i)) = ambient[kept[i]];
        return Point(v);
    }

    /// Norm of the suppressed coordinates.
    double offset(const Point& ambient) const {
        double s = 0.0;
        for (std::size_t i = 0; i < ambient.dim(); ++i)
            if (std::find(kept.begin(), kept.end(), i) == kept.end()) s += ambient[i] * ambient[i];
        return std::sqrt(s);
    }
};

/// Extra data computed by the affine-subspace builders.
struct AffineAnalysis {
    Eigen::MatrixXd averaged_linear; ///< L = (1/m) sum P_{E_i}
    Eigen::VectorXd averaged_shift;  ///< a, with T x = a + L x
    Eigen::MatrixXd intersection;    ///< orthonormal basis of E = cap E_i
    double rho = 1.0;                ///< ||L o P_{E-perp}||
    bool regular = false;
};

struct Scenario {
    std::string name;
    std::vector<Operator> operators;
    std::vector<ConvexSet> sets;
    Point y0;
    std::vector<double> eps_grid;
    std::uint64_t seed = 0;

    /// Closed-form prediction per eps; empty function when none exists.
    std::function<Prediction(double)> predict;
    /// Predicted limit of the cycles as eps -> 0 (from y0).
    std::optional<Point> predicted_limit;
    /// Reference point for distance diagnostics (a point of Fix T).
    std::optional<Point> reference;
    /// Local strong monotonicity (alpha, delta) of Id - T around the limit.
    std::optional<double> strong_monotonicity;
    double monotonicity_radius = std::numeric_limits<double>::infinity();
    std::optional<SliceEmbedding> slice;
    std::optional<AffineAnalysis> affine;
    std::vector<std::string> flags;

    std::size_t m() const { return operators.size(); }
    std::size_t dim() const { return y0.dim(); }
    Operator average() const { return average_of(operators); }
    Operator cycle(double eps) const { return cycle_of(operators, eps); }
    bool has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

inline std::vector<double> default_eps_grid() { return dyadic_grid(1, 10); }

// ---------------------------------------------------------------------------
// Hyperbola family: C1 = R x {alpha}, C2 = R x {beta},
// C3 = {s > 0, t > 0, s t >= gamma}. Fix R^eps is the part of C3 on the line
// t = ((1 - eps) alpha + beta) / (2 - eps); it is empty when the level is not
// positive.

/// How emptiness of Fix R^eps depends on eps for the hyperbola family.
struct HyperbolaThreshold {
    enum class Kind {
        empty_up_to_eta,    ///< alpha + beta < 0 < beta: empty iff eps <= eta
        empty_from_eta,     ///< beta < 0 < alpha + beta: empty iff eps >= eta
        never_empty,        ///< level positive for every eps in (0, 1)
        always_empty,       ///< level nonpositive for every eps in (0, 1)
    };
    Kind kind;
    std::optional<double> eta;
};

inline HyperbolaThreshold classify_hyperbola(double alpha, double beta) {
    using K = HyperbolaThreshold::Kind;
    if (alpha + beta < 0.0 && 0.0 < beta) return {K::empty_up_to_eta, 1.0 + beta / alpha};
    if (beta < 0.0 && 0.0 < alpha + beta) return {K::empty_from_eta, 1.0 + beta / alpha};
    // Otherwise the level (1 - eps) alpha + beta, affine in eps, keeps one
    // sign on the open interval (0, 1).
    if (alpha + beta >= 0.0 && beta >= 0.0 && (alpha + beta > 0.0 || beta > 0.0)) return {K::never_empty, std::nullopt};
    return {K::always_empty, std::nullopt};
}

inline double hyperbola_level(double alpha, double beta, double eps) {
    return ((1.0 - eps) * alpha + beta) / (2.0 - eps);
}

inline Scenario build_hyperbola_example(double alpha, double beta, double gamma, Point y0 = Point{0.0, 0.0}) {
    if (!(gamma > 0.0)) throw UsageError("hyperbola example: gamma must be positive");
    if (y0.dim() != 2) throw UsageError("hyperbola example: y0 must be two-dimensional");
    Scenario s;
    s.name = "hyperbola";
    s.sets = {ConvexSet::horizontal_line(alpha), ConvexSet::horizontal_line(beta),
              ConvexSet::hyperbola_region(gamma)};
    s.operators = projectors(s.sets);
    s.y0 = std::move(y0);
    s.eps_grid = default_eps_grid();
    s.predict = [=](double eps) {
        Prediction p;
        const double num = (1.0 - eps) * alpha + beta;
        if (!(num > 0.0)) {
            p.fix_empty = true;
            return p;
        }
        const double level = num / (2.0 - eps);
        p.coordinate = std::make_pair(std::size_t{1}, level);
        p.fixed_point = Point{(2.0 - eps) * gamma / num, level};
        return p;
    };
    if (alpha + beta > 0.0) {
        // Limit of the bounded branch of Fix R^eps; reached from anchors
        // whose flow approaches Fix T from outside C3 (e.g. the origin).
        s.predicted_limit = Point{2.0 * gamma / (alpha + beta), (alpha + beta) / 2.0};
        s.reference = s.predicted_limit;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Three-set counterexample in R^3, run on the invariant slice xi_1 = 0 with
// coordinates (xi_2, xi_3):
//   C1' = {(-1, 1)},  C2' = {(1, 1)},  C3' = {0 <= xi_3 <= 1, xi_2^2 <= 1 - xi_3}.
// Every set is symmetric under xi_1 -> -xi_1 and projections are unique, so
// orbits started on the slice stay there.

/// Unique point of Fix R^eps on the slice, from the root w of
/// 2 w^3 + w = eps / (2 - eps).
inline Point parabola_fixed_point(double eps) {
    const double w = solve_monotone_cubic(ScalarRootProblem::for_rhs(eps / (2.0 - eps)));
    const double den = 3.0 * (1.0 - eps) + eps * eps;
    return Point{(w + eps * (1.0 - eps)) / den, 1.0 - w * w / den};
}

inline Scenario build_parabola_counterexample(Point y0 = Point{0.0, 1.0}) {
    if (y0.dim() != 2) throw UsageError("parabola counterexample: y0 must be a slice point (xi_2, xi_3)");
    Scenario s;
    s.name = "parabola";
    s.sets = {ConvexSet::affine_subspace(Point{-1.0, 1.0}, std::vector<Point>{}),
              ConvexSet::affine_subspace(Point{1.0, 1.0}, std::vector<Point>{}), ConvexSet::parabola_cap()};
    s.operators = projectors(s.sets);
    s.y0 = std::move(y0);
    s.eps_grid = default_eps_grid();
    s.predict = [](double eps) {
        Prediction p;
        p.fixed_point = parabola_fixed_point(eps);
        p.unique = true;
        return p;
    };
    s.predicted_limit = Point{0.0, 1.0};
    s.reference = s.predicted_limit;
    s.slice = SliceEmbedding{3, {1, 2}};
    return s;
}

/// The point of the least-squares segment used as the stability-failure
/// witness, in ambient coordinates.
inline Point parabola_stability_witness() { return Point{0.5, 0.0, 1.0}; }

// ---------------------------------------------------------------------------
// Two sets. For z in Fix T with a = P1 z and b = P2 z, the point
// ((1 - eps) a + b) / (2 - eps) lies in Fix R^eps and
// d(z, Fix R^eps) <= eps ||b - a|| / (2 (2 - eps)).

inline Scenario build_two_set_example(ConvexSet s1, ConvexSet s2, Point y0, double km_tol = 1e-13) {
    if (s1.dim() != s2.dim() || s1.dim() != y0.dim()) throw UsageError("two-set example: dimension mismatch");
    Scenario s;
    s.name = "two-set";
    s.sets = {std::move(s1), std::move(s2)};
    s.operators = projectors(s.sets);
    s.y0 = std::move(y0);
    s.eps_grid = default_eps_grid();
    const Point z = km_fixed_point(s.average(), s.y0, km_tol);
    const Point a = project(s.sets[0], z);
    const Point b = project(s.sets[1], z);
    s.reference = z;
    s.predict = [a, b](double eps) {
        Prediction p;
        p.fixed_point = ((1.0 - eps) * a + b) / (2.0 - eps);
        p.fix_distance_bound = eps * dist(a, b) / (2.0 * (2.0 - eps));
        return p;
    };
    return s;
}

/// R x {-1} and R x {1}.
inline Scenario build_parallel_lines(Point y0 = Point{0.0, 0.0}) {
    Scenario s = build_two_set_example(ConvexSet::horizontal_line(-1.0), ConvexSet::horizontal_line(1.0),
                                       std::move(y0));
    s.name = "parallel-lines";
    // T x = (x_1, 0): Id - T is strongly monotone with alpha = 1 on the
    // slice through y0, and the flow converges to (y0_1, 0).
    s.strong_monotonicity = 1.0;
    s.predicted_limit = Point{s.y0[0], 0.0};
    s.reference = s.predicted_limit;
    s.predict = [](double eps) {
        Prediction p;
        p.fixed_point = Point{0.0, eps / (2.0 - eps)};
        p.coordinate = std::make_pair(std::size_t{1}, eps / (2.0 - eps));
        p.fix_distance_bound = eps * 2.0 / (2.0 * (2.0 - eps));
        return p;
    };
    return s;
}

// ---------------------------------------------------------------------------
// Affine subspaces C_i = xbar_i + E_i. T x = a + L x with
// L = (1/m) sum P_{E_i} and a = (1/m) sum (xbar_i - P_{E_i} xbar_i). The
// family is regular iff rho = ||L o P_{E-perp}|| < 1; then S = Argmin Phi is
// z + E and the cycles tend to P_S y0.

inline constexpr double kSingularCutoff = 1e-10;

inline AffineAnalysis analyze_affine_family(const std::vector<ConvexSet>& sets) {
    if (sets.empty()) throw UsageError("affine family: no sets");
    const auto n = static_cast<Eigen::Index>(sets.front().dim());
    const auto m = static_cast<double>(sets.size());
    AffineAnalysis an;
    an.averaged_linear = Eigen::MatrixXd::Zero(n, n);
    an.averaged_shift = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd stacked(n * static_cast<Eigen::Index>(sets.size()), n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto* aff = std::get_if<sets::AffineSubspace>(&sets[i].variant());
        if (!aff) throw UsageError("affine family: every set must be an affine subspace");
        if (static_cast<Eigen::Index>(aff->anchor.dim()) != n) throw UsageError("affine family: dimension mismatch");
        const Eigen::MatrixXd p = aff->basis * aff->basis.transpose();
        an.averaged_linear += p / m;
        an.averaged_shift += (aff->anchor.vec() - p * aff->anchor.vec()) / m;
        stacked.block(static_cast<Eigen::Index>(i) * n, 0, n, n) = id - p;
    }
    // E = cap E_i = kernel of the stacked complements.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j < sv.size(); ++j)
        if (sv(j) > kSingularCutoff) ++rank;
    an.intersection = svd.matrixV().rightCols(n - rank);
    const Eigen::MatrixXd perp = id - an.intersection * an.intersection.transpose();
    an.rho = operator_norm_estimate(an.averaged_linear * perp, 200);
    an.regular = an.rho < 1.0 - 1e-8;
    return an;
}

/// Builds the scenario from explicit affine sets.
inline Scenario build_affine_family(std::vector<ConvexSet> sets, Point y0, std::uint64_t seed = 0) {
    Scenario s;
    s.name = "affine";
    s.seed = seed;
    s.sets = std::move(sets);
    s.operators = projectors(s.sets);
    s.y0 = std::move(y0);
    s.eps_grid = default_eps_grid();
    AffineAnalysis an = analyze_affine_family(s.sets);
    if (static_cast<std::size_t>(an.averaged_linear.rows()) != s.y0.dim())
        throw UsageError("affine family: y0 dimension mismatch");
    if (!an.regular) {
        s.flags.push_back("irregular family");
        s.affine = std::move(an);
        return s;
    }
    // Fix T on y0 + E-perp: (I - L) v = a - (I - L) y0 with v in E-perp,
    // solved through the eigendecomposition of the symmetric L.
    const auto n = an.averaged_linear.rows();
    const Eigen::MatrixXd i_minus_l = Eigen::MatrixXd::Identity(n, n) - an.averaged_linear;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(i_minus_l);
    const Eigen::VectorXd rhs = an.averaged_shift - i_minus_l * s.y0.vec();
    Eigen::VectorXd coeff = eig.eigenvectors().transpose() * rhs;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double lam = eig.eigenvalues()(j);
        coeff(j) = lam > kSingularCutoff ? coeff(j) / lam : 0.0;
    }
    const Point limit(Eigen::VectorXd(s.y0.vec() + eig.eigenvectors() * coeff));
    s.predicted_limit = limit;
    s.reference = limit;
    s.strong_monotonicity = 1.0 - an.rho;
    s.affine = std::move(an);
    return s;
}

/// Random regular-subspace family: orthonormal bases drawn from the Haar
/// measure and, when `shifts` is empty, Gaussian shifts with unit expected
/// squared norm.
inline Scenario build_affine_regular(std::size_t n, const std::vector<std::size_t>& subspace_dims,
                                     std::vector<Point> shifts, Point y0, std::uint64_t seed) {
    if (n == 0 || n > 64) throw UsageError("affine regular: need 1 <= n <= 64");
    if (subspace_dims.size() < 2) throw UsageError("affine regular: need at least two subspaces");
    if (!shifts.empty() && shifts.size() != subspace_dims.size())
        throw UsageError("affine regular: one shift per subspace");
    if (y0.dim() != n) throw UsageError("affine regular: y0 dimension mismatch");
    Sampler rng(seed);
    std::vector<ConvexSet> sets;
    for (std::size_t i = 0; i < subspace_dims.size(); ++i) {
        if (subspace_dims[i] >= n) throw UsageError("affine regular: subspace dimension must be < n");
        Eigen::MatrixXd basis = rng.orthonormal_basis(n, subspace_dims[i]);
        Point shift = shifts.empty() ? rng.gaussian(n, 1.0 / std::sqrt(static_cast<double>(n))) : shifts[i];
        sets.push_back(ConvexSet::affine_subspace(std::move(shift), std::move(basis)));
    }
    Scenario s = build_affine_family(std::move(sets), std::move(y0), seed);
    s.name = "affine-regular";
    return s;
}

/// Largest observed dist(R^eps u, R^eps v) / dist(u, v) over random pairs in
/// the slice y0 + E-perp of an affine scenario. Regular families contract
/// there at rate at most 1 - eps m (1 - rho) / 2 for small eps.
inline double affine_contraction_ratio(const Scenario& s, double eps, std::size_t pairs, std::uint64_t seed) {
    if (!s.affine) throw UsageError("affine_contraction_ratio: scenario has no affine analysis");
    if (pairs == 0) throw UsageError("affine_contraction_ratio: need at least one pair");
    const Operator r = s.cycle(eps);
    const Eigen::MatrixXd& e = s.affine->intersection;
    const auto n = static_cast<Eigen::Index>(s.dim());
    const Eigen::MatrixXd perp = Eigen::MatrixXd::Identity(n, n) - e * e.transpose();
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        Sampler rng(mix_seed(seed, i));
        const Point u(Eigen::VectorXd(s.y0.vec() + perp * rng.gaussian_vec(s.dim())));
        const Point v(Eigen::VectorXd(s.y0.vec() + perp * rng.gaussian_vec(s.dim())));
        const double d = dist(u, v);
        if (d == 0.0) continue;
        worst = std::max(worst, dist(apply(r, u), apply(r, v)) / d);
    }
    return worst;
}

// ---------------------------------------------------------------------------

/// dist(z, endpoint of the run anchored at z): an upper bound on
/// d(z, Fix R^eps), exact when Fix R^eps is a singleton. For slice scenarios
/// z may be given in ambient coordinates; the suppressed part enters as an
/// orthogonal offset.
inline double stability_gap(const Scenario& s, const Point& z, double eps, double tol = 1e-10,
                            std::size_t max_sweeps = 1'000'000) {
    Point start = z;
    double offset = 0.0;
    if (s.slice && z.dim() == s.slice->ambient_dim && z.dim() != s.dim()) {
        start = s.slice->to_slice(z);
        offset = s.slice->offset(z);
    }
    RunOptions opt;
    opt.tol = tol;
    opt.max_sweeps = max_sweeps;
    const CycleResult r = run_periodic(s.operators, eps, start, opt);
    if (!r.converged)
        throw NumericalError("stability_gap: run did not converge (" + std::string(to_string(r.status)) +
                                 ", sweeps " + std::to_string(r.sweeps_used) + ")",
                             r.endpoint().to_vector(), r.endpoint_residual);
    const double d = dist(r.endpoint(), start);
    return std::sqrt(offset * offset + d * d);
}

/// Outcome of checking a closed-form prediction against an iterated cycle.
struct PredictionCheck {
    bool checked = false;
    bool ok = true;
    double error = 0.0;
    std::string what;
};

/// Compares a run with the scenario's prediction at the run's eps:
/// unique fixed points must match the endpoint; shared coordinates must match
/// the endpoint coordinate; non-unique fixed points must be fixed by R^eps.
/// An empty prediction must coincide with a non-converged run.
inline PredictionCheck check_prediction(const Scenario& s, const CycleResult& r, double tol) {
    PredictionCheck c;
    if (!s.predict) return c;
    const Prediction p = s.predict(r.eps);
    c.checked = true;
    if (p.fix_empty) {
        c.what = "empty";
        c.ok = !r.converged;
        return c;
    }
    if (!r.converged) {
        c.what = "unconverged";
        c.ok = false;
        return c;
    }
    if (p.fixed_point && p.unique) {
        c.what = "endpoint";
        c.error = dist(*p.fixed_point, r.endpoint());
    } else if (p.coordinate) {
        c.what = "coordinate";
        c.error = std::abs(r.endpoint()[p.coordinate->first] - p.coordinate->second);
    } else if (p.fixed_point) {
        c.what = "fixed-point residual";
        c.error = residual(s.cycle(r.eps), *p.fixed_point);
    } else {
        c.checked = false;
        return c;
    }
    c.ok = c.error <= tol;
    return c;
}

} // namespace cyclefix

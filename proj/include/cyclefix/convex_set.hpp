#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cyclefix/errors.hpp"
#include "cyclefix/point.hpp"

namespace cyclefix {

/// Slack used when checking that a projection landed inside its set.
inline constexpr double kMembershipTol = 1e-9;

/// Iteration cap shared by the scalar solvers behind curved projections.
inline constexpr int kScalarSolverMaxIter = 200;

namespace sets {

/// R x {level} in R^2.
struct HorizontalLine {
    double level;
};

/// anchor + span(basis); basis columns are orthonormal. An empty basis is a
/// single point.
struct AffineSubspace {
    Point anchor;
    Eigen::MatrixXd basis;
};

/// {x : <normal, x> <= offset}
struct Halfspace {
    Point normal;
    double offset;
};

/// Coordinate box; bounds may be infinite.
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct Ball {
    Point center;
    double radius;
};

/// {(s, t) : s > 0, t > 0, s t >= gamma} in R^2.
struct HyperbolaRegion {
    double gamma;
};

/// {(s, t) : 0 <= t <= 1, s^2 <= 1 - t} in R^2.
struct ParabolaCap2D {};

} // namespace sets

/// A nonempty closed convex subset of R^n with an exact (or safeguarded
/// numerical) projection. Parameters are validated at construction and the
/// value is immutable afterwards.
class ConvexSet {
public:
    using Variant = std::variant<sets::HorizontalLine, sets::AffineSubspace, sets::Halfspace, sets::Box,
                                 sets::Ball, sets::HyperbolaRegion, sets::ParabolaCap2D>;

    static ConvexSet horizontal_line(double level) {
        if (!std::isfinite(level)) throw UsageError("horizontal_line: level must be finite");
        return ConvexSet(sets::HorizontalLine{level});
    }

    /// basis: orthonormal direction vectors (may be empty).
    static ConvexSet affine_subspace(Point anchor, const std::vector<Point>& basis) {
        const auto n = static_cast<Eigen::Index>(anchor.dim());
        if (n == 0) throw UsageError("affine_subspace: empty anchor");
        Eigen::MatrixXd b(n, static_cast<Eigen::Index>(basis.size()));
        for (std::size_t j = 0; j < basis.size(); ++j) {
            Point::require_same_dim(anchor, basis[j], "affine_subspace");
            b.col(static_cast<Eigen::Index>(j)) = basis[j].vec();
        }
        return affine_subspace(std::move(anchor), std::move(b));
    }

    static ConvexSet affine_subspace(Point anchor, Eigen::MatrixXd basis) {
        if (basis.cols() > 0 && basis.rows() != static_cast<Eigen::Index>(anchor.dim()))
            throw UsageError("affine_subspace: basis rows must match anchor dimension");
        if (basis.cols() > 0) {
            const Eigen::MatrixXd gram = basis.transpose() * basis;
            const double err =
                (gram - Eigen::MatrixXd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
            if (!(err <= 1e-10)) throw UsageError("affine_subspace: basis is not orthonormal within 1e-10");
        } else {
            basis.resize(static_cast<Eigen::Index>(anchor.dim()), 0);
        }
        return ConvexSet(sets::AffineSubspace{std::move(anchor), std::move(basis)});
    }

    static ConvexSet halfspace(Point normal, double offset) {
        if (!(norm(normal) > 0.0)) throw UsageError("halfspace: normal must be nonzero");
        if (!std::isfinite(offset)) throw UsageError("halfspace: offset must be finite");
        return ConvexSet(sets::Halfspace{std::move(normal), offset});
    }

    static ConvexSet box(std::vector<double> lower, std::vector<double> upper) {
        if (lower.size() != upper.size() || lower.empty()) throw UsageError("box: bound dimensions differ");
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (std::isnan(lower[i]) || std::isnan(upper[i])) throw UsageError("box: NaN bound");
            if (!(lower[i] <= upper[i])) throw UsageError("box: lower > upper");
            if (lower[i] == std::numeric_limits<double>::infinity() ||
                upper[i] == -std::numeric_limits<double>::infinity())
                throw UsageError("box: empty coordinate range");
        }
        const auto n = static_cast<Eigen::Index>(lower.size());
        return ConvexSet(sets::Box{Eigen::Map<Eigen::VectorXd>(lower.data(), n),
                                   Eigen::Map<Eigen::VectorXd>(upper.data(), n)});
    }

    static ConvexSet ball(Point center, double radius) {
        if (!(radius > 0.0) || !std::isfinite(radius)) throw UsageError("ball: radius must be positive");
        return ConvexSet(sets::Ball{std::move(center), radius});
    }

    static ConvexSet hyperbola_region(double gamma) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw UsageError("hyperbola_region: gamma must be positive");
        return ConvexSet(sets::HyperbolaRegion{gamma});
    }

    static ConvexSet parabola_cap() { return ConvexSet(sets::ParabolaCap2D{}); }

    const Variant& variant() const noexcept { return v_; }

    std::size_t dim() const {
        return std::visit(
            [](const auto& s) -> std::size_t {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, sets::AffineSubspace>) return s.anchor.dim();
                else if constexpr (std::is_same_v<S, sets::Halfspace>) return s.normal.dim();
                else if constexpr (std::is_same_v<S, sets::Box>) return static_cast<std::size_t>(s.lower.size());
                else if constexpr (std::is_same_v<S, sets::Ball>) return s.center.dim();
                else return 2;
            },
            v_);
    }

    std::string describe() const;

private:
    explicit ConvexSet(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

namespace detail {

inline void require_dim(const ConvexSet& s, const Point& x, const char* where) {
    if (s.dim() != x.dim())
        throw UsageError(std::string(where) + ": point dimension " + std::to_string(x.dim()) +
                         " does not match set dimension " + std::to_string(s.dim()));
}

/// Positive root of u^4 - p1 u^3 + gamma p2 u - gamma^2, the stationarity
/// condition of u -> (u - p1)^2 + (gamma/u - p2)^2. Golden-section search on
/// log u localizes the minimizer, then a bracketed Newton iteration polishes
/// the quartic root.
inline double hyperbola_foot(double p1, double p2, double gamma) {
    const double scale = 1.0 + std::hypot(p1, p2);
    const auto objective = [&](double s) {
        const double u = std::exp(s);
        const double du = u - p1;
        const double dv = gamma / u - p2;
        return du * du + dv * dv;
    };
    const auto quartic = [&](double u) { return (((u - p1) * u) * u) * u + gamma * p2 * u - gamma * gamma; };
    const auto quartic_prime = [&](double u) { return (4.0 * u - 3.0 * p1) * u * u + gamma * p2; };

    double a = std::log(1e-6 * scale);
    double b = std::log(1e6 * scale);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    int iter = 0;
    for (; iter < kScalarSolverMaxIter && (b - a) > 1e-9; ++iter) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = objective(d);
        }
    }

    double lo = std::exp(a);
    double hi = std::exp(b);
    // The golden-section interval may miss the root by a hair; widen until
    // the quartic changes sign.
    for (; iter < kScalarSolverMaxIter && quartic(lo) > 0.0; ++iter) lo *= 0.5;
    for (; iter < kScalarSolverMaxIter && quartic(hi) < 0.0; ++iter) hi *= 2.0;

    double u = 0.5 * (lo + hi);
    for (; iter < kScalarSolverMaxIter; ++iter) {
        const double q = quartic(u);
        if (q == 0.0) return u;
        if (q < 0.0) lo = u;
        else hi = u;
        const double qp = quartic_prime(u);
        double next = (qp != 0.0) ? u - q / qp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - u) <= 1e-15 * u || hi - lo <= 4e-16 * u) return next;
        u = next;
    }
    throw NumericalError("hyperbola projection: solver did not converge in 200 iterations", {u, gamma / u},
                         quartic(u));
}

/// Real roots in [l, r] of h(v) = 2 v^3 + k v - a, each found by bracketed
/// Newton on a monotone piece.
inline std::vector<double> parabola_stationary_points(double k, double a) {
    const auto h = [&](double v) { return (2.0 * v * v + k) * v - a; };
    const auto hp = [&](double v) { return 6.0 * v * v + k; };
    std::vector<double> knots{-1.0};
    if (k < 0.0) {
        const double c = std::sqrt(-k / 6.0);
        if (c < 1.0) {
            knots.push_back(-c);
            knots.push_back(c);
        }
    }
    knots.push_back(1.0);

    std::vector<double> roots;
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
        double lo = knots[j];
        double hi = knots[j + 1];
        double hlo = h(lo);
        double hhi = h(hi);
        if (hlo == 0.0) {
            roots.push_back(lo);
            continue;
        }
        if (hhi == 0.0) {
            roots.push_back(hi);
            continue;
        }
        if ((hlo < 0.0) == (hhi < 0.0)) continue;
        const bool increasing = hlo < 0.0;
        double v = 0.5 * (lo + hi);
        int iter = 0;
        for (; iter < kScalarSolverMaxIter; ++iter) {
            const double hv = h(v);
            if (hv == 0.0) break;
            if ((hv < 0.0) == increasing) lo = v;
            else hi = v;
            const double d = hp(v);
            double next = (d != 0.0) ? v - hv / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - v) <= 1e-16 || hi - lo <= 1e-16) {
                v = next;
                break;
            }
            v = next;
        }
        if (iter == kScalarSolverMaxIter)
            throw NumericalError("parabola projection: solver did not converge in 200 iterations", {v}, h(v));
        roots.push_back(v);
    }
    return roots;
}

} // namespace detail

/// Membership with slack tol. Flat sets use their defining inequalities;
/// curved sets accept exact members and, when tol > 0, points whose
/// projection lies within tol.
inline bool contains(const ConvexSet& set, const Point& x, double tol);

/// Euclidean projection onto the set.
inline Point project(const ConvexSet& set, const Point& x) {
    detail::require_dim(set, x, "project");
    return std::visit(
        [&](const auto& s) -> Point {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sets::HorizontalLine>) {
                return Point{x[0], s.level};
            } else if constexpr (std::is_same_v<S, sets::AffineSubspace>) {
                const Eigen::VectorXd d = x.vec() - s.anchor.vec();
                return Point(Eigen::VectorXd(s.anchor.vec() + s.basis * (s.basis.transpose() * d)));
            } else if constexpr (std::is_same_v<S, sets::Halfspace>) {
                const double excess = inner(s.normal, x) - s.offset;
                if (excess <= 0.0) return x;
                return x - (excess / inner(s.normal, s.normal)) * s.normal;
            } else if constexpr (std::is_same_v<S, sets::Box>) {
                return Point(Eigen::VectorXd(x.vec().cwiseMax(s.lower).cwiseMin(s.upper)));
            } else if constexpr (std::is_same_v<S, sets::Ball>) {
                const double r = dist(x, s.center);
                if (r <= s.radius) return x;
                return s.center + (s.radius / r) * (x - s.center);
            } else if constexpr (std::is_same_v<S, sets::HyperbolaRegion>) {
                if (x[0] > 0.0 && x[1] > 0.0 && x[0] * x[1] >= s.gamma) return x;
                const double u = detail::hyperbola_foot(x[0], x[1], s.gamma);
                return Point{u, s.gamma / u};
            } else {
                const double a = x[0];
                const double b = x[1];
                if (b >= 0.0 && b + a * a <= 1.0) return x;
                std::vector<std::array<double, 2>> candidates{
                    {std::clamp(a, -1.0, 1.0), 0.0}, {-1.0, 0.0}, {1.0, 0.0}};
                for (double v : detail::parabola_stationary_points(2.0 * b - 1.0, a))
                    candidates.push_back({v, 1.0 - v * v});
                double best = std::numeric_limits<double>::infinity();
                std::array<double, 2> arg{};
                for (const auto& c : candidates) {
                    const double d2 = (c[0] - a) * (c[0] - a) + (c[1] - b) * (c[1] - b);
                    if (d2 < best) {
                        best = d2;
                        arg = c;
                    }
                }
                return Point{arg[0], arg[1]};
            }
        },
        set.variant());
}

inline double distance(const ConvexSet& set, const Point& x) { return dist(x, project(set, x)); }

inline bool contains(const ConvexSet& set, const Point& x, double tol) {
    if (tol < 0.0) throw UsageError("contains: tol must be nonnegative");
    detail::require_dim(set, x, "contains");
    return std::visit(
        [&](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sets::HorizontalLine>) {
                return std::abs(x[1] - s.level) <= tol;
            } else if constexpr (std::is_same_v<S, sets::AffineSubspace>) {
                return distance(set, x) <= tol;
            } else if constexpr (std::is_same_v<S, sets::Halfspace>) {
                return inner(s.normal, x) - s.offset <= tol * norm(s.normal);
            } else if constexpr (std::is_same_v<S, sets::Box>) {
                for (Eigen::Index i = 0; i < s.lower.size(); ++i) {
                    const double xi = x[static_cast<std::size_t>(i)];
                    if (xi < s.lower(i) - tol || xi > s.upper(i) + tol) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<S, sets::Ball>) {
                return dist(x, s.center) <= s.radius + tol;
            } else if constexpr (std::is_same_v<S, sets::HyperbolaRegion>) {
                if (x[0] > 0.0 && x[1] > 0.0 && x[0] * x[1] >= s.gamma) return true;
                return tol > 0.0 && distance(set, x) <= tol;
            } else {
                if (x[1] >= 0.0 && x[1] + x[0] * x[0] <= 1.0) return true;
                return tol > 0.0 && distance(set, x) <= tol;
            }
        },
        set.variant());
}

inline std::string ConvexSet::describe() const {
    const auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    return std::visit(
        [&](const auto& s) -> std::string {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sets::HorizontalLine>) return "horizontal_line(" + num(s.level) + ")";
            else if constexpr (std::is_same_v<S, sets::AffineSubspace>)
                return "affine_subspace(dim=" + std::to_string(s.anchor.dim()) +
                       ", k=" + std::to_string(s.basis.cols()) + ")";
            else if constexpr (std::is_same_v<S, sets::Halfspace>)
                return "halfspace(dim=" + std::to_string(s.normal.dim()) + ", offset=" + num(s.offset) + ")";
            else if constexpr (std::is_same_v<S, sets::Box>) return "box(dim=" + std::to_string(s.lower.size()) + ")";
            else if constexpr (std::is_same_v<S, sets::Ball>)
                return "ball(dim=" + std::to_string(s.center.dim()) + ", r=" + num(s.radius) + ")";
            else if constexpr (std::is_same_v<S, sets::HyperbolaRegion>) return "hyperbola(" + num(s.gamma) + ")";
            else return "parabola_cap";
        },
        v_);
}

namespace detail {
inline void require_family(std::span<const ConvexSet> sets, const Point& x, const char* where) {
    if (sets.size() < 2) throw UsageError(std::string(where) + ": need at least two sets");
    for (const auto& s : sets) require_dim(s, x, where);
}
} // namespace detail

/// Average square distance (1/2m) sum_i d_{C_i}(x)^2.
inline double phi_value(std::span<const ConvexSet> sets, const Point& x) {
    detail::require_family(sets, x, "phi_value");
    double acc = 0.0;
    for (const auto& s : sets) {
        const double d = distance(s, x);
        acc += d * d;
    }
    return acc / (2.0 * static_cast<double>(sets.size()));
}

/// Gradient of phi_value: (1/m) sum_i (x - P_i x).
inline Point phi_gradient(std::span<const ConvexSet> sets, const Point& x) {
    detail::require_family(sets, x, "phi_gradient");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.dim()));
    for (const auto& s : sets) g += x.vec() - project(s, x).vec();
    return Point(Eigen::VectorXd(g / static_cast<double>(sets.size())));
}

/// 2 w^3 + w - c = 0 on [lo, hi]. The residual is strictly increasing, so
/// the root is unique.
struct ScalarRootProblem {
    double c;
    double lo;
    double hi;

    /// Bracket [min(0, c), max(0, c)], which always holds the root.
    static ScalarRootProblem for_rhs(double c) { return {c, std::min(0.0, c), std::max(0.0, c)}; }

    double residual(double w) const { return (2.0 * w * w + 1.0) * w - c; }
};

/// Safeguarded Newton with bisection fallback; |residual| <= 1e-12 on exit
/// (scaled by max(1, |c|) for large right-hand sides).
inline double solve_monotone_cubic(const ScalarRootProblem& p) {
    if (!std::isfinite(p.c) || !std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo <= p.hi))
        throw UsageError("solve_monotone_cubic: invalid bracket");
    double lo = p.lo;
    double hi = p.hi;
    const double rlo = p.residual(lo);
    const double rhi = p.residual(hi);
    if (rlo > 0.0 || rhi < 0.0) throw UsageError("solve_monotone_cubic: bracket does not enclose the root");
    if (rlo == 0.0) return lo;
    if (rhi == 0.0) return hi;
    const double target = 1e-12 * std::max(1.0, std::abs(p.c));
    double w = 0.5 * (lo + hi);
    for (int iter = 0; iter < kScalarSolverMaxIter; ++iter) {
        const double r = p.residual(w);
        if (r == 0.0 || std::abs(r) <= 0.25 * target || hi - lo <= 1e-15 * std::max(1.0, std::abs(w))) break;
        if (r < 0.0) lo = w;
        else hi = w;
        double next = w - r / (6.0 * w * w + 1.0);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == w) break;
        w = next;
    }
    if (std::abs(p.residual(w)) <= target) return w;
    throw NumericalError("solve_monotone_cubic: no convergence in 200 iterations", {w}, p.residual(w));
}

} // namespace cyclefix

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cyclefix/convex_set.hpp"
#include "cyclefix/errors.hpp"
#include "cyclefix/point.hpp"

namespace cyclefix {

/// Largest singular value of a dense matrix, estimated by power iteration on
/// M^T M from a fixed deterministic start vector.
inline double operator_norm_estimate(const Eigen::MatrixXd& m, int iterations = 100) {
    if (m.size() == 0) return 0.0;
    Eigen::VectorXd v(m.cols());
    // Irregular but deterministic start so that no singular direction is
    // missed by symmetry.
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.5 * std::sin(1.0 + 2.0 * static_cast<double>(i));
    v.normalize();
    double sigma = 0.0;
    for (int k = 0; k < iterations; ++k) {
        const Eigen::VectorXd w = m.transpose() * (m * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        sigma = (m * v).norm();
    }
    return sigma;
}

class Operator;

namespace ops {

struct Projection {
    ConvexSet set;
};

/// x -> linear x + shift with ||linear|| <= 1.
struct AffineMap {
    Eigen::MatrixXd linear;
    Point shift;
};

/// Id + eps (inner - Id)
struct Relaxed;

/// (Id + eps (T_m - Id)) o ... o (Id + eps (T_1 - Id)), T_1 applied first.
struct Cycle;

/// (1/m) sum_i T_i
struct Average;

} // namespace ops

/// An immutable expression tree of nonexpansive maps on R^n. Copies share the
/// underlying node.
class Operator {
public:
    struct Node;

    static Operator projection(ConvexSet set);
    static Operator affine(Eigen::MatrixXd linear, Point shift);
    static Operator relaxed(Operator inner, double eps);
    static Operator cycle(std::vector<Operator> factors, double eps);
    static Operator average(std::vector<Operator> terms);

    const Node& node() const { return *node_; }

    /// True for Projection nodes, whose maps are firmly nonexpansive.
    bool is_projection() const;

    /// The set behind a Projection node; UsageError otherwise.
    const ConvexSet& projection_set() const;

    std::string describe() const;

private:
    explicit Operator(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

namespace ops {
struct Relaxed {
    Operator inner;
    double eps;
};
struct Cycle {
    std::vector<Operator> factors;
    double eps;
};
struct Average {
    std::vector<Operator> terms;
};
} // namespace ops

struct Operator::Node {
    std::variant<ops::Projection, ops::AffineMap, ops::Relaxed, ops::Cycle, ops::Average> v;
};

namespace detail {
inline void require_eps(double eps, const char* where) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw UsageError(std::string(where) + ": eps must lie in [0, 1]");
}
} // namespace detail

inline Operator Operator::projection(ConvexSet set) {
    return Operator(std::make_shared<const Node>(Node{ops::Projection{std::move(set)}}));
}

inline Operator Operator::affine(Eigen::MatrixXd linear, Point shift) {
    if (linear.rows() != linear.cols() || linear.rows() != static_cast<Eigen::Index>(shift.dim()))
        throw UsageError("affine: linear part must be square and match the shift dimension");
    if (!linear.allFinite()) throw UsageError("affine: non-finite linear part");
    const double sigma = operator_norm_estimate(linear, 100);
    if (sigma > 1.0 + 1e-9)
        throw UsageError("affine: linear part has norm " + std::to_string(sigma) + " > 1 (not nonexpansive)");
    return Operator(std::make_shared<const Node>(Node{ops::AffineMap{std::move(linear), std::move(shift)}}));
}

inline Operator Operator::relaxed(Operator inner, double eps) {
    detail::require_eps(eps, "relaxed");
    return Operator(std::make_shared<const Node>(Node{ops::Relaxed{std::move(inner), eps}}));
}

inline Operator Operator::cycle(std::vector<Operator> factors, double eps) {
    detail::require_eps(eps, "cycle");
    if (factors.empty()) throw UsageError("cycle: no factors");
    return Operator(std::make_shared<const Node>(Node{ops::Cycle{std::move(factors), eps}}));
}

inline Operator Operator::average(std::vector<Operator> terms) {
    if (terms.empty()) throw UsageError("average: no terms");
    return Operator(std::make_shared<const Node>(Node{ops::Average{std::move(terms)}}));
}

inline bool Operator::is_projection() const { return std::holds_alternative<ops::Projection>(node_->v); }

inline const ConvexSet& Operator::projection_set() const {
    if (const auto* p = std::get_if<ops::Projection>(&node_->v)) return p->set;
    throw UsageError("operator is not a projection");
}

inline std::string Operator::describe() const {
    return std::visit(
        [](const auto& n) -> std::string {
            using N = std::decay_t<decltype(n)>;
            const auto join = [](const std::vector<Operator>& xs) {
                std::string s;
                for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i].describe();
                return s;
            };
            if constexpr (std::is_same_v<N, ops::Projection>) return "P[" + n.set.describe() + "]";
            else if constexpr (std::is_same_v<N, ops::AffineMap>)
                return "affine(dim=" + std::to_string(n.shift.dim()) + ")";
            else if constexpr (std::is_same_v<N, ops::Relaxed>)
                return "relaxed(" + n.inner.describe() + ", eps=" + std::to_string(n.eps) + ")";
            else if constexpr (std::is_same_v<N, ops::Cycle>)
                return "cycle([" + join(n.factors) + "], eps=" + std::to_string(n.eps) + ")";
            else return "average([" + join(n.terms) + "])";
        },
        node_->v);
}

/// x + eps (y - x)
inline Point relax_step(const Point& x, const Point& y, double eps) { return lerp(x, y, eps); }

inline Point apply(const Operator& op, const Point& x) {
    return std::visit(
        [&](const auto& n) -> Point {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ops::Projection>) {
                return project(n.set, x);
            } else if constexpr (std::is_same_v<N, ops::AffineMap>) {
                if (x.dim() != n.shift.dim()) throw UsageError("apply(affine): dimension mismatch");
                return Point(Eigen::VectorXd(n.linear * x.vec() + n.shift.vec()));
            } else if constexpr (std::is_same_v<N, ops::Relaxed>) {
                if (n.eps == 0.0) return x;
                return relax_step(x, apply(n.inner, x), n.eps);
            } else if constexpr (std::is_same_v<N, ops::Cycle>) {
                Point y = x;
                for (const auto& f : n.factors) y = relax_step(y, apply(f, y), n.eps);
                return y;
            } else {
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.dim()));
                for (const auto& t : n.terms) acc += apply(t, x).vec();
                return Point(Eigen::VectorXd(acc / static_cast<double>(n.terms.size())));
            }
        },
        op.node().v);
}

/// x - op(x), i.e. (Id - T) x.
inline Point displacement(const Operator& op, const Point& x) { return x - apply(op, x); }

/// ||x - op(x)||
inline double residual(const Operator& op, const Point& x) { return dist(x, apply(op, x)); }

/// Convenience constructors for operator families.
inline std::vector<Operator> projectors(std::span<const ConvexSet> sets) {
    std::vector<Operator> out;
    out.reserve(sets.size());
    for (const auto& s : sets) out.push_back(Operator::projection(s));
    return out;
}

inline Operator average_of(std::span<const Operator> family) {
    return Operator::average(std::vector<Operator>(family.begin(), family.end()));
}

inline Operator cycle_of(std::span<const Operator> family, double eps) {
    return Operator::cycle(std::vector<Operator>(family.begin(), family.end()), eps);
}

} // namespace cyclefix

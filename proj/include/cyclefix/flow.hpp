#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "cyclefix/errors.hpp"
#include "cyclefix/operator.hpp"
#include "cyclefix/point.hpp"

namespace cyclefix {

/// Samples of x' = -(x - T x), x(0) = y0, on a uniform grid.
struct FlowTrajectory {
    std::vector<double> times;
    std::vector<Point> states;
    double step = 0.0;
    Operator op;

    double t_end() const { return times.back(); }
};

/// Classical fourth-order Runge-Kutta on the uniform grid with n =
/// ceil(t_end / h) steps; the step is shrunk to t_end / n so that the last
/// sample sits exactly at t_end.
inline FlowTrajectory integrate_flow(const Operator& t_avg, const Point& y0, double t_end, double h) {
    if (!(h > 0.0) || !(t_end >= h) || !std::isfinite(t_end))
        throw UsageError("integrate_flow: need h > 0 and t_end >= h");
    const auto n = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
    const double dt = t_end / static_cast<double>(n);
    const auto rhs = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return apply(t_avg, Point(x)).vec() - x;
    };

    FlowTrajectory tr{{}, {}, dt, t_avg};
    tr.times.reserve(n + 1);
    tr.states.reserve(n + 1);
    tr.times.push_back(0.0);
    tr.states.push_back(y0);
    Eigen::VectorXd x = y0.vec();
    for (std::size_t k = 1; k <= n; ++k) {
        const Eigen::VectorXd k1 = rhs(x);
        const Eigen::VectorXd k2 = rhs(x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = rhs(x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = rhs(x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite())
            throw NumericalError("integrate_flow: non-finite state", tr.states.back().to_vector());
        tr.times.push_back(static_cast<double>(k) * dt);
        tr.states.push_back(Point(x));
    }
    return tr;
}

/// Piecewise-linear interpolant of sweep endpoints z_k, with breakpoints at
/// t = k m eps.
class Interpolant {
public:
    Interpolant(std::vector<Point> iterates, double eps, std::size_t m)
        : z_(std::move(iterates)), eps_(eps), m_(m) {
        if (z_.size() < 2) throw UsageError("build_interpolant: need at least two iterates");
        if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("build_interpolant: eps must lie in (0, 1]");
        if (m == 0) throw UsageError("build_interpolant: block length must be positive");
        for (const auto& z : z_) Point::require_same_dim(z_.front(), z, "build_interpolant");
    }

    double period() const { return static_cast<double>(m_) * eps_; }
    double t_max() const { return static_cast<double>(z_.size() - 1) * period(); }
    double eps() const { return eps_; }
    std::size_t block_length() const { return m_; }
    const std::vector<Point>& iterates() const { return z_; }

    Point operator()(double t) const {
        if (!(t >= 0.0) || t > t_max() * (1.0 + 1e-12))
            throw UsageError("interpolant: t outside [0, last breakpoint]");
        const double s = t / period();
        auto k = static_cast<std::size_t>(std::floor(s));
        if (k >= z_.size() - 1) return z_.back();
        const double theta = s - static_cast<double>(k);
        if (theta == 0.0) return z_[k];
        return lerp(z_[k], z_[k + 1], theta);
    }

private:
    std::vector<Point> z_;
    double eps_;
    std::size_t m_;
};

inline Interpolant build_interpolant(std::vector<Point> z_iterates, double eps, std::size_t m) {
    return Interpolant(std::move(z_iterates), eps, m);
}

/// sup over the trajectory grid points t <= t_end of ||psi(t) - x(t)||.
inline double flow_deviation(const Interpolant& psi, const FlowTrajectory& traj, double t_end) {
    if (traj.times.empty()) throw UsageError("flow_deviation: empty trajectory");
    if (!(t_end > 0.0) || t_end > traj.t_end() * (1.0 + 1e-12) || t_end > psi.t_max() * (1.0 + 1e-12))
        throw UsageError("flow_deviation: t_end outside the common domain");
    if (dist(psi(0.0), traj.states.front()) > 1e-12)
        throw UsageError("flow_deviation: interpolant and trajectory start at different points");
    double sup = 0.0;
    for (std::size_t k = 0; k < traj.times.size() && traj.times[k] <= t_end * (1.0 + 1e-12); ++k)
        sup = std::max(sup, dist(psi(std::min(traj.times[k], psi.t_max())), traj.states[k]));
    return sup;
}

/// Exponential decay of theta(t) = ||x(t) - x_ref||^2 / 2 at rate 2 alpha
/// after the first grid time t0 where x(t0) enters the closed ball
/// B(x_ref; delta). Pass delta = +inf for whole-space hypotheses (t0 = 0).
/// A trajectory that never enters the ball fails the check.
inline bool decay_check(const FlowTrajectory& traj, const Point& x_ref, double alpha,
                        double delta = std::numeric_limits<double>::infinity()) {
    if (!(alpha > 0.0)) return false;
    std::size_t start = traj.states.size();
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        if (dist(traj.states[k], x_ref) <= delta) {
            start = k;
            break;
        }
    }
    if (start == traj.states.size()) return false;
    const auto theta = [&](std::size_t k) {
        const double d = dist(traj.states[k], x_ref);
        return 0.5 * d * d;
    };
    const double theta0 = theta(start);
    const double t0 = traj.times[start];
    for (std::size_t k = start; k < traj.states.size(); ++k) {
        const double envelope = theta0 * std::exp(-2.0 * alpha * (traj.times[k] - t0)) * (1.0 + 1e-6);
        if (theta(k) > envelope) return false;
    }
    return true;
}

} // namespace cyclefix

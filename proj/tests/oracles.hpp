#pragma once

// Brute-force reference computations. None of these call the library's own
// solvers, so agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

/// Root of a continuous f with f(lo) <= 0 <= f(hi) by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double flo = f(lo);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Real root of 2 w^3 + w = c.
inline double cubic_root(double c, double tol = 1e-14) {
    const double lo = std::min(0.0, c), hi = std::max(0.0, c);
    return bisect([c](double w) { return 2.0 * w * w * w + w - c; }, lo, hi, tol);
}

/// Projection of an exterior point p onto {s > 0, t > 0, s t >= gamma}: dense
/// log grid over the boundary parameter u, then bisection on the derivative
/// of u -> (u - p1)^2 + (gamma / u - p2)^2 around the best grid cell.
inline std::pair<double, double> hyperbola_projection(double p1, double p2, double gamma) {
    if (p1 > 0.0 && p2 > 0.0 && p1 * p2 >= gamma) return {p1, p2};
    const auto f = [&](double u) {
        const double a = u - p1, b = gamma / u - p2;
        return a * a + b * b;
    };
    const auto df = [&](double u) { return 2.0 * (u - p1) - 2.0 * (gamma / u - p2) * gamma / (u * u); };
    const int n = 200000;
    const double lmin = std::log(1e-6), lmax = std::log(1e6);
    int best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double u = std::exp(lmin + (lmax - lmin) * i / n);
        const double v = f(u);
        if (v < fbest) {
            fbest = v;
            best = i;
        }
    }
    const double lo = std::exp(lmin + (lmax - lmin) * std::max(0, best - 1) / n);
    const double hi = std::exp(lmin + (lmax - lmin) * std::min(n, best + 1) / n);
    double u = 0.5 * (lo + hi);
    if (df(lo) <= 0.0 && df(hi) >= 0.0) u = bisect(df, lo, hi, 1e-15);
    return {u, gamma / u};
}

/// Projection onto {0 <= b <= 1, a^2 <= 1 - b} by dense sampling of the
/// boundary (parabola arc and base segment) and local refinement.
inline std::pair<double, double> parabola_projection(double a, double b) {
    if (b >= 0.0 && b <= 1.0 && a * a <= 1.0 - b) return {a, b};
    const auto arc = [](double v) { return std::pair<double, double>{v, 1.0 - v * v}; };
    const auto d2 = [&](std::pair<double, double> q) {
        return (q.first - a) * (q.first - a) + (q.second - b) * (q.second - b);
    };
    std::pair<double, double> best{std::clamp(a, -1.0, 1.0), 0.0};
    double dbest = d2(best);
    const int n = 100000;
    int ibest = -1;
    for (int i = 0; i <= n; ++i) {
        const double v = -1.0 + 2.0 * i / n;
        const double dv = d2(arc(v));
        if (dv < dbest) {
            dbest = dv;
            best = arc(v);
            ibest = i;
        }
    }
    if (ibest >= 0) {
        // Golden-section refinement on the arc.
        double lo = -1.0 + 2.0 * std::max(0, ibest - 1) / n, hi = -1.0 + 2.0 * std::min(n, ibest + 1) / n;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int k = 0; k < 200; ++k) {
            const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
            if (d2(arc(x1)) < d2(arc(x2))) hi = x2;
            else lo = x1;
        }
        const auto q = arc(0.5 * (lo + hi));
        if (d2(q) < dbest) best = q;
    }
    return best;
}

/// Central finite-difference gradient.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Largest eigenvalue of the symmetric 2x2 matrix [[a, b], [b, d]].
inline double sym2_max_eig(double a, double b, double d) {
    const double tr = a + d, det = a * d - b * b;
    return tr / 2.0 + std::sqrt(tr * tr / 4.0 - det);
}

/// One relaxed sweep over the lines R x {-1}, R x {1}, written out by hand:
/// second coordinate y -> (1 - eps) y - eps, then -> (1 - eps) y + eps.
inline double parallel_lines_sweep(double y, double eps) {
    y = (1.0 - eps) * y - eps;
    return (1.0 - eps) * y + eps;
}

} // namespace oracle

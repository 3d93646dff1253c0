#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cyclefix/errors.hpp"

namespace cyclefix {

/// Default absolute comparison tolerance for O(1) quantities.
inline constexpr double kDefaultTol = 1e-10;

/// An immutable point of R^n. Every stored entry is finite; arithmetic that
/// would produce NaN or Inf raises NumericalError instead.
class Point {
public:
    Point() = default;

    explicit Point(Eigen::VectorXd coords) : coords_(std::move(coords)) { check_finite(); }

    Point(std::initializer_list<double> coords)
        : coords_(Eigen::Map<const Eigen::VectorXd>(coords.begin(),
                                                    static_cast<Eigen::Index>(coords.size()))) {
        check_finite();
    }

    explicit Point(std::span<const double> coords)
        : coords_(Eigen::Map<const Eigen::VectorXd>(coords.data(),
                                                    static_cast<Eigen::Index>(coords.size()))) {
        check_finite();
    }

    static Point zero(std::size_t n) { return Point(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))); }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(coords_.size()); }
    double operator[](std::size_t i) const { return coords_(static_cast<Eigen::Index>(i)); }
    const Eigen::VectorXd& vec() const noexcept { return coords_; }

    std::vector<double> to_vector() const { return {coords_.data(), coords_.data() + coords_.size()}; }

    Point operator-() const { return Point(Eigen::VectorXd(-coords_)); }

    friend Point operator+(const Point& a, const Point& b) {
        require_same_dim(a, b, "operator+");
        return Point(Eigen::VectorXd(a.coords_ + b.coords_));
    }
    friend Point operator-(const Point& a, const Point& b) {
        require_same_dim(a, b, "operator-");
        return Point(Eigen::VectorXd(a.coords_ - b.coords_));
    }
    friend Point operator*(double s, const Point& a) { return Point(Eigen::VectorXd(s * a.coords_)); }
    friend Point operator*(const Point& a, double s) { return s * a; }
    friend Point operator/(const Point& a, double s) { return Point(Eigen::VectorXd(a.coords_ / s)); }

    /// Bitwise equality of coordinates.
    friend bool operator==(const Point& a, const Point& b) {
        return a.dim() == b.dim() && a.coords_ == b.coords_;
    }

    static void require_same_dim(const Point& a, const Point& b, const char* where) {
        if (a.dim() != b.dim()) {
            throw UsageError(std::string(where) + ": dimension mismatch (" + std::to_string(a.dim()) +
                             " vs " + std::to_string(b.dim()) + ")");
        }
    }

    friend std::ostream& operator<<(std::ostream& os, const Point& p) {
        os << '(';
        for (std::size_t i = 0; i < p.dim(); ++i) os << (i ? ", " : "") << p[i];
        return os << ')';
    }

private:
    void check_finite() const {
        if (coords_.size() == 0) throw UsageError("point: dimension must be at least 1");
        if (!coords_.allFinite()) throw NumericalError("non-finite point entry", to_vector());
    }

    Eigen::VectorXd coords_;
};

inline double inner(const Point& u, const Point& v) {
    Point::require_same_dim(u, v, "inner");
    return u.vec().dot(v.vec());
}

inline double norm(const Point& u) { return u.vec().norm(); }

inline double dist(const Point& u, const Point& v) {
    Point::require_same_dim(u, v, "dist");
    return (u.vec() - v.vec()).norm();
}

/// (1 - t) a + t b
inline Point lerp(const Point& a, const Point& b, double t) {
    Point::require_same_dim(a, b, "lerp");
    return Point(Eigen::VectorXd((1.0 - t) * a.vec() + t * b.vec()));
}

} // namespace cyclefix

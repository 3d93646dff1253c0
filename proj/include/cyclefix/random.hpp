#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "cyclefix/point.hpp"

namespace cyclefix {

/// Seeded sampler for test points and random instances.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal() { return normal_(gen_); }

    Eigen::VectorXd gaussian_vec(std::size_t n) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal();
        return v;
    }

    Point gaussian(std::size_t n, double scale = 1.0) { return Point(Eigen::VectorXd(scale * gaussian_vec(n))); }

    /// Uniform in the closed ball B(center; radius).
    Point in_ball(const Point& center, double radius) {
        const std::size_t n = center.dim();
        Eigen::VectorXd d = gaussian_vec(n);
        while (d.norm() == 0.0) d = gaussian_vec(n);
        const double r = radius * std::pow(uniform(0.0, 1.0), 1.0 / static_cast<double>(n));
        return Point(Eigen::VectorXd(center.vec() + (r / d.norm()) * d));
    }

    /// n x k matrix with orthonormal columns, Haar-distributed.
    Eigen::MatrixXd orthonormal_basis(std::size_t n, std::size_t k) {
        Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
        for (Eigen::Index j = 0; j < g.cols(); ++j) g.col(j) = gaussian_vec(n);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
        // Fix column signs so the distribution does not depend on the QR
        // sign convention.
        const Eigen::MatrixXd r = qr.matrixQR().topRows(g.cols()).template triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < q.cols(); ++j)
            if (r(j, j) < 0.0) q.col(j) *= -1.0;
        return q;
    }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace cyclefix

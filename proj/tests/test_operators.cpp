#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cyclefix/operator.hpp"
#include "cyclefix/random.hpp"
#include "oracles.hpp"

using namespace cyclefix;

namespace {
std::vector<ConvexSet> parallel_lines() { return {ConvexSet::horizontal_line(-1.0), ConvexSet::horizontal_line(1.0)}; }
} // namespace

TEST(Apply, RelaxedMidpoint) {
    const Operator r = Operator::relaxed(Operator::projection(ConvexSet::horizontal_line(1.0)), 0.5);
    EXPECT_EQ(apply(r, Point{0.0, 0.0}), (Point{0.0, 0.5}));
}

TEST(Apply, RelaxedEndpointsActAsIdentityAndInner) {
    const Operator p = Operator::projection(ConvexSet::ball(Point{0.0, 0.0}, 1.0));
    const Point x{3.0, 4.0};
    EXPECT_EQ(apply(Operator::relaxed(p, 0.0), x), x);
    EXPECT_EQ(apply(Operator::relaxed(p, 1.0), x), apply(p, x));
}

TEST(Apply, CycleOverParallelLinesMatchesHandComposition) {
    const auto ops = projectors(parallel_lines());
    EXPECT_EQ(apply(cycle_of(ops, 0.5), Point{0.0, 0.0}), (Point{0.0, 0.25}));
    Sampler rng(2);
    for (int k = 0; k < 100; ++k) {
        const double eps = rng.uniform(0.0, 1.0), y = rng.uniform(-5.0, 5.0), x1 = rng.uniform(-5.0, 5.0);
        const Point out = apply(cycle_of(ops, eps), Point{x1, y});
        EXPECT_NEAR(out[0], x1, 1e-14);
        EXPECT_NEAR(out[1], oracle::parallel_lines_sweep(y, eps), 1e-14);
        EXPECT_NEAR(out[1], (1 - eps) * (1 - eps) * y + eps * eps, 1e-14);
    }
}

TEST(Apply, CycleAtOneIsPlainComposition) {
    const std::vector<ConvexSet> sets{ConvexSet::ball(Point{0.0, 0.0}, 1.0), ConvexSet::halfspace(Point{1.0, 0.0}, -0.5),
                                      ConvexSet::horizontal_line(0.3)};
    const auto ops = projectors(sets);
    Sampler rng(3);
    for (int k = 0; k < 100; ++k) {
        const Point x = rng.gaussian(2, 3.0);
        const Point direct = apply(ops[2], apply(ops[1], apply(ops[0], x)));
        EXPECT_EQ(apply(cycle_of(ops, 1.0), x), direct);
    }
}

TEST(Apply, AverageOfParallelLines) {
    const auto ops = projectors(parallel_lines());
    EXPECT_EQ(apply(average_of(ops), Point{3.0, 5.0}), (Point{3.0, 0.0}));
}

TEST(Residual, Examples) {
    const auto ops = projectors(parallel_lines());
    EXPECT_EQ(residual(ops[1], Point{4.0, 1.0}), 0.0);
    EXPECT_EQ(residual(average_of(ops), Point{0.0, 0.0}), 0.0);
    Sampler rng(9);
    const Operator p = Operator::projection(ConvexSet::hyperbola_region(1.0));
    for (int k = 0; k < 200; ++k) {
        const double eps = rng.uniform(0.0, 1.0);
        const Point x = rng.gaussian(2, 3.0);
        EXPECT_NEAR(residual(Operator::relaxed(p, eps), x), eps * residual(p, x), 1e-12);
    }
}

TEST(Displacement, Examples) {
    const auto ops = projectors(parallel_lines());
    EXPECT_EQ(displacement(ops[0], Point{2.0, -1.0}), (Point{0.0, 0.0}));
    EXPECT_EQ(displacement(average_of(ops), Point{0.0, 3.0}), (Point{0.0, 3.0}));
}

TEST(Displacement, AverageOfProjectorsIsPhiGradient) {
    const std::vector<ConvexSet> sets{ConvexSet::horizontal_line(0.2), ConvexSet::hyperbola_region(2.0),
                                      ConvexSet::parabola_cap()};
    const auto ops = projectors(sets);
    Sampler rng(10);
    for (int k = 0; k < 300; ++k) {
        const Point x = rng.gaussian(2, 4.0);
        EXPECT_LE(dist(displacement(average_of(ops), x), phi_gradient(sets, x)), 1e-12);
    }
}

TEST(Cycle, CommonFixedPointIsPreserved) {
    const std::vector<ConvexSet> sets{ConvexSet::ball(Point{0.0, 0.0, 0.0}, 2.0),
                                      ConvexSet::halfspace(Point{0.0, 0.0, 1.0}, 0.0),
                                      ConvexSet::box({-1.0, -1.0, -5.0}, {1.0, 1.0, 5.0})};
    const auto ops = projectors(sets);
    const Point xstar{0.5, -0.5, -0.5};
    for (double eps : {0.0, 0.1, 0.5, 0.9, 1.0}) EXPECT_LE(dist(apply(cycle_of(ops, eps), xstar), xstar), 1e-12);
}

TEST(Affine, ConstructionChecksNorm) {
    Eigen::MatrixXd rot(2, 2);
    rot << 0.0, -1.0, 1.0, 0.0;
    EXPECT_NO_THROW(Operator::affine(rot, Point{1.0, 2.0}));
    EXPECT_THROW(Operator::affine(1.1 * rot, Point{1.0, 2.0}), UsageError);
    EXPECT_THROW(Operator::affine(rot, Point{1.0, 2.0, 3.0}), UsageError);
    const Operator a = Operator::affine(rot, Point{1.0, 2.0});
    EXPECT_EQ(apply(a, Point{1.0, 0.0}), (Point{1.0, 3.0}));
}

TEST(Operator, EpsOutsideUnitIntervalRejected) {
    const auto ops = projectors(parallel_lines());
    EXPECT_THROW(Operator::relaxed(ops[0], -0.1), UsageError);
    EXPECT_THROW(Operator::relaxed(ops[0], 1.5), UsageError);
    EXPECT_THROW(cycle_of(ops, 2.0), UsageError);
    EXPECT_THROW(average_of(std::vector<Operator>{}), UsageError);
}

TEST(OperatorNorm, PowerIterationOnDiagonal) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m.diagonal() << 0.2, -0.7, 0.5;
    EXPECT_NEAR(operator_norm_estimate(m), 0.7, 1e-12);
}

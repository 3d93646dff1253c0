#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cyclefix/flow.hpp"
#include "cyclefix/random.hpp"
#include "cyclefix/scenarios.hpp"

using namespace cyclefix;

namespace {
Operator parallel_average() {
    const std::vector<ConvexSet> s{ConvexSet::horizontal_line(-1.0), ConvexSet::horizontal_line(1.0)};
    return average_of(projectors(s));
}
} // namespace

TEST(IntegrateFlow, ParallelLinesClosedForm) {
    const FlowTrajectory tr = integrate_flow(parallel_average(), Point{0.0, 1.0}, 3.0, 1e-3);
    ASSERT_EQ(tr.times.size(), 3001u);
    for (int t : {1, 2, 3}) {
        const Point& x = tr.states[static_cast<std::size_t>(t) * 1000];
        EXPECT_NEAR(tr.times[static_cast<std::size_t>(t) * 1000], t, 1e-12);
        EXPECT_EQ(x[0], 0.0);
        EXPECT_NEAR(x[1], std::exp(-t), 1e-8);
    }
}

TEST(IntegrateFlow, FixedStartStaysPut) {
    const FlowTrajectory tr = integrate_flow(parallel_average(), Point{4.0, 0.0}, 1.0, 0.01);
    for (const auto& x : tr.states) EXPECT_EQ(x, (Point{4.0, 0.0}));
}

TEST(IntegrateFlow, FourthOrderStepHalving) {
    const Scenario s = build_hyperbola_example(0.0, 1.0, 1.0, Point{0.2, 3.0});
    const Point ref = integrate_flow(s.average(), s.y0, 2.0, 0.0125 / 8).states.back();
    const double e1 = dist(integrate_flow(s.average(), s.y0, 2.0, 0.1).states.back(), ref);
    const double e2 = dist(integrate_flow(s.average(), s.y0, 2.0, 0.05).states.back(), ref);
    const double e3 = dist(integrate_flow(s.average(), s.y0, 2.0, 0.025).states.back(), ref);
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e1 / e2, 20.0);
    EXPECT_GT(e2 / e3, 12.0);
    EXPECT_LT(e2 / e3, 20.0);
}

TEST(IntegrateFlow, UniformGridEndsAtHorizon) {
    const FlowTrajectory tr = integrate_flow(parallel_average(), Point{0.0, 1.0}, 1.0, 0.3);
    EXPECT_EQ(tr.times.size(), 5u);
    EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
    EXPECT_DOUBLE_EQ(tr.step, 0.25);
}

TEST(IntegrateFlow, RejectsBadSteps) {
    EXPECT_THROW(integrate_flow(parallel_average(), Point{0.0, 1.0}, 1.0, 0.0), UsageError);
    EXPECT_THROW(integrate_flow(parallel_average(), Point{0.0, 1.0}, 0.001, 0.01), UsageError);
}

TEST(Interpolant, BreakpointsAndMidpoints) {
    const std::vector<Point> z{Point{0.0, 0.0}, Point{1.0, 2.0}, Point{3.0, -1.0}};
    const Interpolant psi = build_interpolant(z, 0.25, 2);
    EXPECT_DOUBLE_EQ(psi.period(), 0.5);
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_EQ(psi(0.5 * static_cast<double>(k)), z[k]);
    EXPECT_LE(dist(psi(0.25), Point{0.5, 1.0}), 1e-15);
    EXPECT_THROW(psi(1.01), UsageError);
    EXPECT_THROW(psi(-0.1), UsageError);
    EXPECT_THROW(build_interpolant({Point{0.0}}, 0.5, 2), UsageError);
}

TEST(Interpolant, AffineBetweenBreakpoints) {
    Sampler rng(8);
    std::vector<Point> z;
    for (int k = 0; k < 20; ++k) z.push_back(rng.gaussian(3));
    const double eps = 0.1;
    const Interpolant psi(z, eps, 3);
    for (int i = 0; i < 1000; ++i) {
        const auto k = static_cast<std::size_t>(rng.uniform(0.0, 19.0));
        const double theta = rng.uniform(0.0, 1.0);
        const double t = (static_cast<double>(k) + theta) * 3 * eps;
        if (t > psi.t_max()) continue;
        const Point expect = (1.0 - theta) * z[k] + theta * z[std::min<std::size_t>(k + 1, 19)];
        EXPECT_LE(dist(psi(t), expect), 1e-12);
    }
}

TEST(FlowDeviation, SyntheticExactIteratesGiveZero) {
    const FlowTrajectory tr = integrate_flow(parallel_average(), Point{0.0, 1.0}, 1.0, 0.01);
    // Iterates sampled from the trajectory itself, one per breakpoint.
    const double eps = 0.005;
    std::vector<Point> z;
    for (std::size_t k = 0; k < tr.states.size(); ++k) z.push_back(tr.states[k]);
    const Interpolant psi(z, eps, 2);
    EXPECT_LE(flow_deviation(psi, tr, 1.0), 1e-15);
}

TEST(FlowDeviation, ParallelLinesLinearInEps) {
    const std::vector<ConvexSet> sets{ConvexSet::horizontal_line(-1.0), ConvexSet::horizontal_line(1.0)};
    const auto ops = projectors(sets);
    const Point y0{0.0, 1.0};
    const auto deviation = [&](double eps) {
        const auto n = static_cast<std::size_t>(std::ceil(3.0 / (2.0 * eps)));
        const Interpolant psi(periodic_orbit(ops, eps, y0, n), eps, 2);
        return flow_deviation(psi, integrate_flow(average_of(ops), y0, 3.0, std::min(1e-3, eps / 10)), 3.0);
    };
    double gamma_hat = 0.0;
    for (double eps : {0.1, 0.05, 0.025}) {
        const double d1 = deviation(eps), d2 = deviation(eps / 2);
        EXPECT_GE(d1 / d2, 1.6);
        EXPECT_LE(d1 / d2, 2.4);
        gamma_hat = std::max(gamma_hat, d1 / (eps * 3.0));
    }
    for (double eps : {0.1, 0.05, 0.025}) EXPECT_LE(deviation(eps), gamma_hat * eps * 3.0 + 1e-15);
}

TEST(FlowDeviation, DomainChecks) {
    const FlowTrajectory tr = integrate_flow(parallel_average(), Point{0.0, 1.0}, 1.0, 0.01);
    const Interpolant shorter({Point{0.0, 1.0}, Point{0.0, 0.5}}, 0.1, 2);
    EXPECT_THROW(flow_deviation(shorter, tr, 1.0), UsageError);
    const Interpolant other_start({Point{0.0, 2.0}, Point{0.0, 0.5}}, 0.5, 2);
    EXPECT_THROW(flow_deviation(other_start, tr, 1.0), UsageError);
}

TEST(DecayCheck, Examples) {
    const FlowTrajectory tr = integrate_flow(parallel_average(), Point{0.0, 1.0}, 3.0, 1e-3);
    EXPECT_TRUE(decay_check(tr, Point{0.0, 0.0}, 1.0));
    EXPECT_FALSE(decay_check(tr, Point{0.0, 0.0}, 2.0));
    const FlowTrajectory still = integrate_flow(parallel_average(), Point{1.0, 0.0}, 1.0, 0.01);
    EXPECT_TRUE(decay_check(still, Point{1.0, 0.0}, 1.0));
    EXPECT_FALSE(decay_check(tr, Point{5.0, 0.0}, 1.0, 0.5));
}

TEST(Flow, DistanceToFixedPointsNonincreasing) {
    const Scenario s = build_hyperbola_example(0.0, 1.0, 1.0, Point{-1.0, 3.0});
    const FlowTrajectory tr = integrate_flow(s.average(), s.y0, 4.0, 1e-3);
    for (const Point& xstar : {Point{2.0, 0.5}, Point{5.0, 0.5}}) {
        ASSERT_LE(residual(s.average(), xstar), 1e-12);
        for (std::size_t k = 1; k < tr.states.size(); ++k)
            EXPECT_LE(dist(tr.states[k], xstar), dist(tr.states[k - 1], xstar) + 1e-9);
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cyclefix/bounds.hpp"
#include "cyclefix/scenarios.hpp"
#include "oracles.hpp"

using namespace cyclefix;

namespace {
std::vector<Operator> parallel_ops() {
    const std::vector<ConvexSet> s{ConvexSet::horizontal_line(-1.0), ConvexSet::horizontal_line(1.0)};
    return projectors(s);
}
} // namespace

TEST(LemmaGap, Examples) {
    const auto ops = parallel_ops();
    EXPECT_EQ(lemma_gap(ops, 0.0, Point{3.0, 7.0}), 0.0);
    const std::vector<ConvexSet> meet{ConvexSet::ball(Point{0.0, 0.0}, 1.0), ConvexSet::horizontal_line(0.0)};
    for (double eps : {0.0, 0.3, 1.0}) EXPECT_LE(lemma_gap(projectors(meet), eps, Point{0.2, 0.0}), 1e-15);
    // Hand-composed scalar maps: sweep y -> (1-eps)^2 y + eps^2, average T y = 0.
    const double eps = 0.5, y = 1.0;
    const double expect = std::abs(oracle::parallel_lines_sweep(y, eps) - y + eps * 2.0 * y);
    EXPECT_NEAR(lemma_gap(ops, eps, Point{0.0, y}), expect, 1e-15);
    EXPECT_NEAR(expect, 0.5, 1e-15);
}

TEST(LemmaEnvelope, Constants) {
    EXPECT_EQ(general_constant(2), 4.0);
    EXPECT_EQ(firm_constant(2), 1.0);
    EXPECT_EQ(general_constant(3), 20.0);
    EXPECT_EQ(firm_constant(3), 4.0);
}

TEST(LemmaEnvelope, Examples) {
    const std::vector<ConvexSet> meet{ConvexSet::ball(Point{0.0, 0.0}, 1.0), ConvexSet::horizontal_line(0.0)};
    const auto ops = projectors(meet);
    EXPECT_EQ(lemma_envelope(ops, 0.5, Point{0.1, 0.0}, Point{0.1, 0.0}, false), 0.0);
    EXPECT_EQ(lemma_envelope(ops, 0.5, Point{0.1, 0.0}, Point{0.1, 0.0}, true), 0.0);
    const auto pl = parallel_ops();
    // z = 0: rho = 1/2; x = (3, 4): ||x - z|| = 5.
    EXPECT_DOUBLE_EQ(lemma_envelope(pl, 0.5, Point{3.0, 4.0}, Point{0.0, 0.0}, false), 0.25 * 4.0 * 5.5);
    EXPECT_DOUBLE_EQ(lemma_envelope(pl, 0.5, Point{3.0, 4.0}, Point{0.0, 0.0}, true), 0.25 * 1.0 * 6.0);
    const std::vector<Operator> mixed{pl[0], Operator::affine(Eigen::MatrixXd::Identity(2, 2), Point{0.0, 0.0})};
    EXPECT_THROW(lemma_envelope(mixed, 0.5, Point{0.0, 0.0}, Point{0.0, 0.0}, true), UsageError);
    EXPECT_NO_THROW(lemma_envelope(mixed, 0.5, Point{0.0, 0.0}, Point{0.0, 0.0}, false));
}

TEST(LemmaEnvelope, NondecreasingInDistance) {
    const auto ops = build_hyperbola_example(0.0, 1.0, 1.0).operators;
    double prev = 0.0;
    for (double r = 0.0; r < 10.0; r += 0.5) {
        const double e = lemma_envelope(ops, 0.3, Point{r, 0.0}, Point{0.0, 0.0}, true);
        EXPECT_GE(e, prev);
        prev = e;
    }
}

TEST(BoundSuite, ConsistentFamilyPasses) {
    const std::vector<ConvexSet> meet{ConvexSet::ball(Point{0.0, 0.0, 0.0}, 10.0),
                                      ConvexSet::halfspace(Point{1.0, 0.0, 0.0}, 20.0)};
    const std::vector<double> grid{1.0, 0.5, 0.1};
    const auto res = bound_check_suite(projectors(meet), grid, 300, 5.0, 1);
    EXPECT_TRUE(res.passed());
    EXPECT_TRUE(res.firm_checked);
    for (const auto& s : res.samples) EXPECT_LE(s.lhs, 1e-14);
}

TEST(BoundSuite, HyperbolaPasses) {
    const auto ops = build_hyperbola_example(0.0, 1.0, 1.0).operators;
    const std::vector<double> grid{1.0, 0.5, 0.1};
    const auto res = bound_check_suite(ops, grid, 1000, 5.0, 42);
    EXPECT_TRUE(res.passed());
    EXPECT_EQ(res.samples.size(), 3000u);
    EXPECT_GT(res.max_ratio, 0.0);
    EXPECT_LE(res.max_ratio, 1.0);
    for (const auto& s : res.samples) {
        EXPECT_GE(s.lhs, 0.0);
        EXPECT_LE(norm(s.x), 5.0 + 1e-12);
        EXPECT_DOUBLE_EQ(s.ratio, s.lhs / s.rhs_general);
    }
}

TEST(BoundSuite, SabotagedEnvelopeFails) {
    const auto ops = build_hyperbola_example(0.0, 1.0, 1.0).operators;
    const std::vector<double> grid{1.0, 0.5, 0.1};
    const auto clean = bound_check_suite(ops, grid, 1000, 5.0, 42);
    BoundSuiteOptions opt;
    opt.envelope_factor = 0.9 * clean.max_ratio;
    const auto res = bound_check_suite(ops, grid, 1000, 5.0, 42, opt);
    ASSERT_FALSE(res.passed());
    const auto& v = res.violations.front();
    EXPECT_FALSE(v.family.empty());
    EXPECT_GT(v.lhs, v.rhs);
}

TEST(BoundSuite, DeterministicForSeed) {
    const auto ops = parallel_ops();
    const std::vector<double> grid{0.5};
    BoundSuiteOptions one, many;
    one.threads = 1;
    many.threads = 3;
    const auto a = bound_check_suite(ops, grid, 200, 3.0, 77, one);
    const auto b = bound_check_suite(ops, grid, 200, 3.0, 77, many);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].x, b.samples[i].x);
        EXPECT_EQ(a.samples[i].lhs, b.samples[i].lhs);
    }
    const auto c = bound_check_suite(ops, grid, 200, 3.0, 78, one);
    EXPECT_NE(a.samples[0].x, c.samples[0].x);
}

TEST(BoundSuite, ArgumentValidation) {
    const auto ops = parallel_ops();
    const std::vector<double> grid{0.5};
    EXPECT_THROW(bound_check_suite(ops, grid, 0, 1.0, 0), UsageError);
    EXPECT_THROW(bound_check_suite(ops, grid, 10, -1.0, 0), UsageError);
    const std::vector<double> bad{1.5};
    EXPECT_THROW(bound_check_suite(ops, bad, 10, 1.0, 0), UsageError);
}

TEST(GapSlope, QuadraticScaling) {
    const auto ops = build_hyperbola_example(0.0, 1.0, 1.0).operators;
    const auto grid = dyadic_grid(4, 12);
    EXPECT_NEAR(gap_slope(ops, Point{-1.0, 3.0}, grid), 2.0, 0.2);
}

#include "fsde/verify.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "fsde/errors.hpp"
#include "test_support.hpp"

namespace fsde {
namespace {

GridSpec coarse() {
  GridSpec g;
  g.lo = -3.0;
  g.hi = 3.0;
  g.step = 0.5;
  g.n_segments = 40;
  return g;
}

TEST(GridSpec, AxisPoints) {
  EXPECT_EQ(GridSpec{}.axis_points(), 21);
  GridSpec g;
  g.step = 0.3;
  EXPECT_THROW(g.axis_points(), InvalidArgument);
}

TEST(SampleSegments, DeterministicAndInRange) {
  const GridSpec g = coarse();
  const auto a = sample_segments(g, 2, 0.5);
  const auto b = sample_segments(g, 2, 0.5);
  ASSERT_EQ(a.size(), 40u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].values(), b[i].values());
    EXPECT_EQ(a[i].n_hist(), g.segment_nodes);
    EXPECT_LE(a[i].values().maxCoeff(), g.hi);
    EXPECT_GE(a[i].values().minCoeff(), g.lo);
  }
  GridSpec other = g;
  other.segment_seed = 7;
  EXPECT_NE(sample_segments(other, 2, 0.5)[0].values(), a[0].values());
}

TEST(Example41, AllAssumptionsHold) {
  const ModelWithSuite ex = testing::example_41();
  for (const char* which : {"A1", "A2", "A3", "A4", "A3'", "A4'"}) {
    const AssumptionReport r = check_assumption_grid(ex.suite, which, coarse(), 0);
    EXPECT_TRUE(r.passed) << which << " worst margin " << r.worst_margin;
    EXPECT_GT(r.points, 0u) << which;
    EXPECT_EQ(r.violation_count, 0u) << which;
  }
  const AssumptionReport a1 = check_assumption_grid(ex.suite, "A1", GridSpec{});
  EXPECT_EQ(a1.points, 441u);
  EXPECT_EQ(a1.evidence, "grid");
  EXPECT_TRUE(a1.passed);
  EXPECT_EQ(check_assumption_grid(ex.suite, "A2", coarse()).evidence, "sampled-segments");
}

TEST(Example41, DelayConstantViolationDetected) {
  // Without the W^l weight, |b(xi) - b(xi')| <= 0.3 ||xi - xi'|| is false.
  ModelWithSuite ex = testing::example_41();
  ex.suite.constants["l"] = 0.0;
  ex.suite.constants["lambda_A4"] = 0.3;
  const AssumptionReport r = check_assumption_grid(ex.suite, "A4", coarse());
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.worst_margin, 0.0);
  ASSERT_FALSE(r.violations.empty());
  EXPECT_EQ(r.violations.front().point.size(), 2u);
}

TEST(Example42, LyapunovConditions) {
  const ModelWithSuite ex = make_example_4_2(0.5);
  const AssumptionReport e21 = check_assumption_grid(ex.suite, "E21", coarse(), 0);
  EXPECT_TRUE(e21.passed) << e21.worst_margin;
  EXPECT_EQ(e21.points, 13u * 13u * 13u * 13u);
  const AssumptionReport e25 = check_assumption_grid(ex.suite, "E25", coarse(), 0);
  EXPECT_TRUE(e25.passed) << e25.worst_margin;

  const AssumptionReport bound = check_assumption_grid(ex.suite, "E21-bound", coarse(), 0);
  EXPECT_TRUE(bound.passed) << bound.worst_margin;
  ASSERT_TRUE(bound.info.count("full_generator_violations"));
  // Adding the Ito term 6 y^2 breaks the displayed bound near y = 1.
  EXPECT_GT(bound.info.at("full_generator_violations"), 0.0);
  EXPECT_GT(bound.info.at("full_generator_worst_margin"), 0.0);
}

TEST(Example42, E28Bound) {
  EXPECT_NEAR(e28_constant_k(0.1), 0.5 * 2.625 * 2.625, 1e-14);
  const ModelWithSuite ex = make_example_4_2(0.5);
  const AssumptionReport r = check_e28_grid(ex.suite, coarse(), 0.1, 0);
  EXPECT_NEAR(r.info.at("K"), 3.4453125, 1e-12);
  EXPECT_EQ(r.info.at("eps_param"), 0.1);
  EXPECT_TRUE(r.passed) << r.worst_margin;
  EXPECT_THROW(check_e28_grid(ex.suite, coarse(), 0.3), InvalidArgument);
  EXPECT_THROW(check_e28_grid(ex.suite, coarse(), 0.0), InvalidArgument);
}

TEST(TrivialSuite, OuPassesA1) {
  const ModelWithSuite ou = make_ou_benchmark(0.5, 1.0);
  const AssumptionReport r = check_assumption_grid(ou.suite, "A1", GridSpec{});
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.points, 21u);
}

TEST(Violations, DetectedAndCapped) {
  ModelWithSuite ex = testing::example_41();
  ex.suite.constants["lambda"] = 0.01;
  const AssumptionReport r = check_assumption_grid(ex.suite, "A1", GridSpec{}, 4);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.violation_count, kMaxListedViolations);
  EXPECT_EQ(r.violations.size(), kMaxListedViolations);
  EXPECT_EQ(r.worst_point.size(), 2u);
  for (const Violation& v : r.violations) EXPECT_GT(v.margin, 0.0);
}

TEST(Violations, ThreadCountDoesNotChangeReport) {
  ModelWithSuite ex = testing::example_41();
  ex.suite.constants["lambda"] = 0.5;
  const AssumptionReport a = check_assumption_grid(ex.suite, "A1", GridSpec{}, 1);
  const AssumptionReport b = check_assumption_grid(ex.suite, "A1", GridSpec{}, 8);
  EXPECT_EQ(a.violation_count, b.violation_count);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.worst_point, b.worst_point);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    EXPECT_EQ(a.violations[i].point, b.violations[i].point);
  }
}

TEST(Errors, UnknownIdAndMissingMaps) {
  const ModelWithSuite ex = testing::example_41();
  EXPECT_THROW(check_assumption_grid(ex.suite, "A9", coarse()), InvalidArgument);
  EXPECT_THROW(check_assumption_grid(ex.suite, "E21", coarse()), InvalidArgument);
  EXPECT_THROW(check_e28_grid(ex.suite, coarse(), 0.1), InvalidArgument);
}

}  // namespace
}  // namespace fsde

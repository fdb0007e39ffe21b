#include "fsde/harness.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "fsde/errors.hpp"
#include "fsde/functional.hpp"
#include "fsde/verify.hpp"
#include "test_support.hpp"

namespace fsde {
namespace {

using nlohmann::json;

TerminalFunctional fn(const std::string& name) {
  return make_functional(name, json::object(), 1, 1);
}

struct Ex42 {
  ModelWithSuite ex = make_example_4_2(0.5);
  SimGrid grid = SimGrid::make(1.5, 0.5, 0.01);
  Segment xi = testing::constant_segment({1.0, 1.0}, grid.n_hist, 0.5);
  Segment h = testing::constant_segment({1.0, 0.5}, grid.n_hist, 0.5);
};

TEST(MomentBound, DeltaAndRows) {
  const Ex42 e;
  // W(1, 1) = 3, U(1, 1) = 1: delta = (0.5 + 1) 3 + 0.5 * 0.5 * 1.
  const MomentBoundReport r =
      check_moment_bound(*e.ex.model, e.ex.suite, e.xi, {0.5, 1.0, 2.0}, 0.01, {2000, 1, 0});
  EXPECT_DOUBLE_EQ(r.delta, 4.75);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(r.rows[1].bound, 4.75 * std::exp(2.0));
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.n_rejected, 0u);
  EXPECT_THROW(check_moment_bound(*e.ex.model, e.ex.suite, e.xi, {0.505}, 0.01, {100, 1, 0}),
               InvalidArgument);
  EXPECT_THROW(check_moment_bound(*e.ex.model, e.ex.suite, e.xi, {1.0, 0.5}, 0.01, {100, 1, 0}),
               InvalidArgument);
}

TEST(Growth, RunningSupIsMonotone) {
  const Ex42 e;
  const GrowthReport g = sup_w_growth(*e.ex.model, e.ex.suite, e.xi, {0.5, 1.0, 2.0}, 0.01, {1000, 2, 0});
  ASSERT_EQ(g.sup_w.size(), 3u);
  EXPECT_LE(g.sup_w[0].mean, g.sup_w[1].mean);
  EXPECT_LE(g.sup_w[1].mean, g.sup_w[2].mean);
  EXPECT_GE(g.sup_w[0].mean, 3.0);
  EXPECT_TRUE(g.finite);
}

TEST(LogHarnack, ConstantFunctionalGivesZero) {
  const Ex42 e;
  const InequalityReport r =
      check_log_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h, fn("one"), e.grid, {200, 1, 0});
  EXPECT_EQ(r.name, "log-harnack");
  EXPECT_EQ(r.lhs.mean, 0.0);
  EXPECT_EQ(r.fitted_c, 0.0);
  EXPECT_GT(r.rhs_shape_value, 0.0);
  EXPECT_TRUE(r.passed_structural);
  ASSERT_EQ(r.sweep.size(), 3u);
  EXPECT_EQ(r.sweep_parameter, "h_scale");
  EXPECT_LT(r.sweep[0].rhs_shape, r.sweep[2].rhs_shape);
}

TEST(LogHarnack, JensenAndShapeScaling) {
  const Ex42 e;
  const InequalityReport r = check_log_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h,
                                               fn("one_plus_tanh2_y"), e.grid, {4000, 3, 0});
  EXPECT_TRUE(r.checks.at("jensen_h0"));
  EXPECT_LE(r.info.at("jensen_lhs_h0"), 0.0);
  EXPECT_TRUE(r.checks.at("finite"));
  EXPECT_THROW(check_log_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h, fn("tanh_y"), e.grid,
                                 {100, 1, 0}),
               InvalidArgument);
}

TEST(PowerHarnack, ConstantFunctionalAndSweep) {
  const Ex42 e;
  const InequalityReport one = check_power_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h, fn("one"),
                                                   e.grid, 2.0, 0.0, {200, 1, 0}, {1.5, 3.0});
  EXPECT_EQ(one.name, "power-harnack");
  EXPECT_EQ(one.lhs.mean, 1.0);
  EXPECT_EQ(one.fitted_c, 0.0);
  EXPECT_EQ(one.sweep.size(), 3u);
  EXPECT_EQ(one.info.at("p"), 2.0);
  // E(p) carries the factor p / (p - 1).
  EXPECT_NEAR(one.sweep[1].rhs_shape * (1.5 - 1.0) / 1.5, one.sweep[0].rhs_shape / 2.0, 1e-12);
  EXPECT_TRUE(one.passed_structural);

  const InequalityReport f = check_power_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h,
                                                 fn("exp_neg_y2"), e.grid, 2.0, 0.25, {2000, 1, 0});
  EXPECT_TRUE(f.checks.at("jensen_baseline"));
  EXPECT_THROW(check_power_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h, fn("one"), e.grid, 1.0,
                                   0.0, {100, 1, 0}),
               InvalidArgument);
  EXPECT_THROW(check_power_harnack(*e.ex.model, &e.ex.suite, e.xi, e.h, fn("one"), e.grid, 2.0,
                                   0.5, {100, 1, 0}),
               InvalidArgument);
}

TEST(GradientBound, DeltaFormAndTauSweep) {
  const Ex42 e;
  const InequalityReport r = gradient_bound_report(*e.ex.model, &e.ex.suite, e.xi, e.h,
                                                   fn("tanh_y"), e.grid, {2000, 1, 0}, {0.5, 2.0});
  EXPECT_EQ(r.name, "gradient-bound");
  EXPECT_EQ(r.info.at("delta_form"), 1.0);
  ASSERT_EQ(r.sweep.size(), 2u);
  EXPECT_DOUBLE_EQ(r.sweep[0].parameter, 0.5);
  EXPECT_DOUBLE_EQ(r.sweep[1].parameter, 2.0);
  EXPECT_GE(r.lhs.mean, 0.0);
  EXPECT_TRUE(r.passed_structural);

  const ModelWithSuite ex41 = testing::example_41();
  const InequalityReport plain = gradient_bound_report(*ex41.model, &ex41.suite, e.xi, e.h,
                                                       fn("tanh_y"), e.grid, {500, 1, 0});
  EXPECT_EQ(plain.info.at("delta_form"), 0.0);
}

TEST(EntropyGradient, FloorAndConstants) {
  const Ex42 e;
  const InequalityReport r = entropy_gradient_report(*e.ex.model, e.ex.suite, e.xi, e.h,
                                                     fn("one_plus_tanh2_y"), e.grid, 0.1,
                                                     {2000, 1, 0});
  EXPECT_EQ(r.name, "entropy-gradient");
  EXPECT_NEAR(r.info.at("K"), e28_constant_k(0.1), 1e-15);
  EXPECT_DOUBLE_EQ(r.info.at("r_floor"), 1.0);  // k = 0, tau = 1
  ASSERT_EQ(r.sweep.size(), 5u);
  EXPECT_DOUBLE_EQ(r.sweep[4].parameter, 16.0);
  EXPECT_TRUE(r.checks.at("entropy_nonnegative"));
  EXPECT_GE(r.info.at("entropy"), 0.0);
  EXPECT_TRUE(r.passed_structural);
  EXPECT_THROW(entropy_gradient_report(*e.ex.model, e.ex.suite, e.xi, e.h, fn("tanh_y"), e.grid,
                                       0.1, {100, 1, 0}),
               InvalidArgument);
}

TEST(ShapeInputs, Norms) {
  const Ex42 e;
  const ShapeInputs s = shape_inputs(*e.ex.model, &e.ex.suite, e.xi, e.h, e.grid);
  EXPECT_DOUBLE_EQ(s.h0, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.w_sup, 3.0);
  EXPECT_DOUBLE_EQ(s.tau, 1.0);
  EXPECT_DOUBLE_EQ(s.tau_min1(), 1.0);
  EXPECT_EQ(s.k, 0);
}

}  // namespace
}  // namespace fsde

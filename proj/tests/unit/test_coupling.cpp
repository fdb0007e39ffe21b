#include "fsde/coupling.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "fsde/errors.hpp"
#include "test_support.hpp"

namespace fsde {
namespace {

// Chain model with r0 = 0.5 and T = 1.5, so tau = 1 and Q = 1/6.
struct Chain {
  ModelSpec model = testing::integrator_chain(0.5);
  SimGrid grid = SimGrid::make(1.5, 0.5, 0.01);
};

TEST(CouplingPlan, ChainClosedForm) {
  const Chain c;
  const CouplingPlan plan = build_plan(c.model, testing::constant_segment({1.0, 0.0}, 50, 0.5), c.grid);
  EXPECT_DOUBLE_EQ(plan.tau(), 1.0);
  EXPECT_EQ(plan.tau_index(), 100);
  EXPECT_NEAR(plan.q_inv_vec()(0), 6.0, 1e-9);
  for (int n = 0; n <= c.grid.n_steps; n += 10) {
    const double s = std::min(n * c.grid.dt, 1.0);
    EXPECT_NEAR(plan.alpha()(0, n), -6.0 * s * (1.0 - s), 1e-9) << n;
  }
  EXPECT_LT(plan.ll_residual(), 1e-12);
  // X-component of Theta: 1 + int_0^s alpha = 1 - 3 s^2 + 2 s^3, zero from tau on.
  for (int n = 0; n <= c.grid.n_steps; n += 25) {
    const double s = std::min(n * c.grid.dt, 1.0);
    EXPECT_NEAR(plan.theta()(0, c.grid.column(n)), 1.0 - 3.0 * s * s + 2.0 * s * s * s, 1e-9) << n;
  }
  EXPECT_LT(plan.theta_tail_max(), 1e-9);
}

TEST(CouplingPlan, ChainWithVelocityDirection) {
  const Chain c;
  const CouplingPlan plan = build_plan(c.model, testing::constant_segment({0.0, 1.0}, 50, 0.5), c.grid);
  // q = 6 int_0^1 v = 3, phi = v - 3 s (1 - s).
  EXPECT_NEAR(plan.q_inv_vec()(0), 3.0, 1e-9);
  const int n = 40;
  const double s = 0.4;
  EXPECT_NEAR(plan.phi()(0, n), (1.0 - s) - 3.0 * s * (1.0 - s), 1e-9);
  EXPECT_NEAR(plan.v_prime()[n], -1.0, 1e-15);
  EXPECT_NEAR(plan.alpha_prime()(0, n), -3.0 * (1.0 - 2.0 * s), 1e-9);
  EXPECT_DOUBLE_EQ(plan.v()[plan.tau_index()], 0.0);
  EXPECT_DOUBLE_EQ(plan.v_prime()[plan.tau_index()], 0.0);
  EXPECT_DOUBLE_EQ(plan.alpha_prime()(0, plan.tau_index()), 0.0);
  EXPECT_EQ(plan.h2_at_zero()(0), 1.0);
}

TEST(CouplingPlan, InvariantsOnExample) {
  const ModelWithSuite ex = testing::example_41();
  const SimGrid g = SimGrid::make(2.0, 0.5, 0.005);
  const Segment h = Segment::from_function(2, g.n_hist, 0.5, [](double t) {
    StateVec v(2);
    v << std::sin(3.0 * t), 1.0 + t;
    return v;
  });
  const CouplingPlan plan = build_plan(*ex.model, h, g);
  EXPECT_EQ(plan.theta().leftCols(g.n_hist + 1), h.values());
  EXPECT_LE(plan.ll_residual(), kPlanTolerance);
  EXPECT_LT(plan.theta_tail_max(), 1e-7);
  for (int n = plan.tau_index(); n <= g.n_steps; ++n) {
    EXPECT_EQ(plan.phi().col(n).norm(), 0.0);
  }
}

TEST(CouplingPlan, LinearInDirection) {
  const ModelWithSuite ex = testing::example_41();
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const Segment h = testing::constant_segment({0.4, -1.2}, g.n_hist, 0.5);
  const CouplingPlan p1 = build_plan(*ex.model, h, g);
  const CouplingPlan p3 = build_plan(*ex.model, h * 3.0, g);
  EXPECT_LE((p3.theta() - 3.0 * p1.theta()).norm(), 1e-10 * p3.theta().norm());
  EXPECT_LE((p3.alpha_prime() - 3.0 * p1.alpha_prime()).norm(), 1e-10 * p3.alpha_prime().norm());
}

TEST(CouplingPlan, NoDegenerateBlock) {
  const ModelWithSuite ou = make_ou_benchmark(0.5, 1.0);
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const CouplingPlan plan = build_plan(*ou.model, testing::constant_segment({2.0}, g.n_hist, 0.5), g);
  EXPECT_EQ(plan.alpha().norm(), 0.0);
  EXPECT_NEAR(plan.phi()(0, 50), 2.0 * 0.5, 1e-12);
  EXPECT_EQ(plan.ll_residual(), 0.0);
}

TEST(CouplingPlan, RejectsBadInput) {
  const Chain c;
  EXPECT_THROW(build_plan(c.model, testing::constant_segment({1.0}, 50, 0.5), c.grid),
               InvalidArgument);
  EXPECT_THROW(build_plan(c.model, testing::constant_segment({1.0, 0.0}, 50, 0.5),
                          SimGrid::make(1.5, 0.25, 0.01)),
               InvalidArgument);
}

TEST(ThetaSegment, OnAndOffGrid) {
  const Chain c;
  const CouplingPlan plan = build_plan(c.model, testing::constant_segment({1.0, 0.0}, 50, 0.5), c.grid);
  const Segment on = theta_segment(plan, 0.7);
  EXPECT_EQ(on.n_hist(), 50);
  EXPECT_EQ(on.values().col(50), plan.theta().col(c.grid.column(70)));
  const Segment off = theta_segment(plan, 0.705);
  const DenseVector mid = 0.5 * (plan.theta().col(c.grid.column(70)) + plan.theta().col(c.grid.column(71)));
  EXPECT_LE((off.values().col(50) - mid).norm(), 1e-12);
  EXPECT_EQ(theta_segment(plan, 0.0).values(), plan.h().values());
  EXPECT_THROW(theta_segment(plan, 1.6), InvalidArgument);
}

TEST(CouplingIdentity, FirstOrderInDt) {
  // Z = b = 0 makes the shifted path deterministic relative to the base, so
  // the identity error is the Euler error of integrating Theta.
  auto error_at = [](double dt) {
    const ModelSpec model = testing::integrator_chain(0.5);
    const SimGrid g = SimGrid::make(1.5, 0.5, dt);
    const Segment xi = testing::constant_segment({0.2, -0.1}, g.n_hist, 0.5);
    const Segment h = testing::constant_segment({1.0, 1.0}, g.n_hist, 0.5);
    const PathBundle base = simulate_path(model, xi, g, generate_increments(5, 0, g.n_steps, 1, dt));
    const CouplingPlan plan = build_plan(model, h, g);
    const PathBundle shifted = simulate_shifted(model, plan, base, 0.5);
    return check_coupling_identity(base, shifted, plan, 0.5);
  };
  const CouplingIdentityCheck coarse = error_at(0.01);
  const CouplingIdentityCheck fine = error_at(0.005);
  EXPECT_LT(coarse.sup_error, 0.1);
  EXPECT_LT(fine.sup_error, coarse.sup_error);
  EXPECT_NEAR(observed_order(coarse.sup_error, fine.sup_error), 1.0, 0.2);
  EXPECT_NEAR(observed_order(coarse.terminal_error, fine.terminal_error), 1.0, 0.2);
  EXPECT_THROW(observed_order(0.0, 1.0), InvalidArgument);
}

TEST(Girsanov, ZeroEpsGivesUnitDensity) {
  const ModelWithSuite ex = testing::example_41();
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const Segment xi = testing::constant_segment({0.3, 0.1}, g.n_hist, 0.5);
  const PathBundle base = simulate_path(*ex.model, xi, g, generate_increments(1, 2, g.n_steps, 1, g.dt));
  const CouplingPlan plan = build_plan(*ex.model, testing::constant_segment({1.0, 1.0}, g.n_hist, 0.5), g);
  const GirsanovRecord r = girsanov_weight(*ex.model, plan, base, 0.0);
  EXPECT_EQ(r.log_r, 0.0);
  EXPECT_EQ(r.r, 1.0);
  EXPECT_TRUE(r.finite);
}

TEST(Girsanov, DeterministicQuadraticTermForChain) {
  // Z = b = 0: Phi = eps (v' h2 + alpha'), independent of the path.
  const Chain c;
  const CouplingPlan plan = build_plan(c.model, testing::constant_segment({1.0, 0.0}, 50, 0.5), c.grid);
  const PathBundle base = simulate_path(c.model, testing::constant_segment({0.0, 0.0}, 50, 0.5), c.grid,
                                        generate_increments(1, 0, c.grid.n_steps, 1, c.grid.dt));
  const double eps = 0.2;
  const GirsanovRecord r = girsanov_weight(c.model, plan, base, eps);
  // alpha' = -6 (1 - 2 s) on [0, 1): int alpha'^2 = 12.
  EXPECT_NEAR(r.quad_term, eps * eps * 12.0, 0.02);
  double ito = 0.0;
  for (int n = 0; n < c.grid.n_steps; ++n) ito += eps * plan.alpha_prime()(0, n) * base.noise.increments(0, n);
  EXPECT_NEAR(r.ito_term, ito, 1e-12);
  EXPECT_NEAR(r.log_r, -ito - 0.5 * r.quad_term, 1e-12);
}

}  // namespace
}  // namespace fsde

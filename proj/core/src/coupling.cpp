#include "fsde/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsde/errors.hpp"

namespace fsde {

StateVec CouplingPlan::h2_at_zero() const {
  const int d = static_cast<int>(phi_.rows());
  return h_.view().newest().tail(d);
}

CouplingPlan build_plan(const ModelSpec& model, const Segment& h_in, const SimGrid& grid) {
  if (h_in.dim() != model.dim()) {
    throw InvalidArgument("build_plan: direction has dimension " + std::to_string(h_in.dim()) +
                          ", model needs " + std::to_string(model.dim()));
  }
  if (std::abs(model.r0() - grid.r0()) > 1e-9 * model.r0()) {
    throw InvalidArgument("build_plan: grid r0 differs from model r0");
  }
  const int m = model.m();
  const int d = model.d();
  const int dim = m + d;
  const double dt = grid.dt;

  CouplingPlan plan;
  plan.grid_ = grid;
  plan.h_ = h_in.resampled(grid.n_hist);
  plan.tau_index_ = grid.n_steps - grid.n_hist;
  plan.tau_ = plan.tau_index_ * dt;
  const int big_n = plan.tau_index_;
  const double tau = plan.tau_;
  const int steps = grid.n_steps;

  const DenseVector h0 = plan.h_.view().newest();
  const DenseVector h1 = h0.head(m);
  const DenseVector h2 = h0.tail(d);

  plan.v_.assign(steps + 1, 0.0);
  plan.v_prime_.assign(steps + 1, 0.0);
  for (int n = 0; n < big_n; ++n) {
    plan.v_[n] = (tau - n * dt) / tau;
    plan.v_prime_[n] = -1.0 / tau;
  }
  plan.alpha_ = DenseMatrix::Zero(d, steps + 1);
  plan.alpha_prime_ = DenseMatrix::Zero(d, steps + 1);
  plan.q_inv_vec_ = DenseVector::Zero(m);

  std::vector<DenseMatrix> e_neg;  // e^{-t_n A}, n = 0..N
  const std::vector<double> w = quadrature::simpson_weights(big_n, dt);
  if (m > 0) {
    const DenseMatrix a = model.a();
    const DenseMatrix mm = model.mm();
    plan.gramian_ = fsde::gramian(a, mm, tau, tau, dt);
    e_neg.reserve(big_n + 1);
    for (int n = 0; n <= big_n; ++n) e_neg.push_back(mat_exp(a, -n * dt));

    DenseVector j_int = DenseVector::Zero(m);
    const DenseVector m_h2 = mm * h2;
    for (int n = 0; n <= big_n; ++n) {
      if (plan.v_[n] != 0.0) j_int.noalias() += (w[n] * plan.v_[n]) * (e_neg[n] * m_h2);
    }
    plan.q_inv_vec_ = plan.gramian_.inverse * (h1 + j_int);

    const DenseMatrix mt = mm.transpose();
    const DenseMatrix mt_at = mt * a.transpose();
    for (int n = 0; n < big_n; ++n) {
      const double s = n * dt;
      const double g = s * (tau - s) / (tau * tau);
      const double g_prime = (tau - 2.0 * s) / (tau * tau);
      const DenseVector et_q = e_neg[n].transpose() * plan.q_inv_vec_;
      plan.alpha_.col(n) = -g * (mt * et_q);
      plan.alpha_prime_.col(n) = -(g_prime * (mt * et_q) - g * (mt_at * et_q));
    }
  }
  plan.phi_ = plan.alpha_;
  for (int n = 0; n <= steps; ++n) plan.phi_.col(n) += plan.v_[n] * h2;

  plan.theta_ = DenseMatrix::Zero(dim, grid.columns());
  plan.theta_.leftCols(grid.n_hist + 1) = plan.h_.values();
  for (int n = 1; n <= steps; ++n) {
    plan.theta_.col(grid.column(n)).tail(d) = plan.phi_.col(n);
  }
  if (m > 0) {
    const DenseMatrix a = model.a();
    const DenseMatrix mm = model.mm();
    DenseMatrix integrand(m, big_n + 1);
    for (int n = 0; n <= big_n; ++n) integrand.col(n) = e_neg[n] * (mm * plan.phi_.col(n));
    const DenseMatrix running = quadrature::cumulative_simpson(integrand, dt);

    DenseVector ll = h1;
    for (int n = 0; n <= big_n; ++n) ll.noalias() += w[n] * integrand.col(n);
    plan.ll_residual_ = ll.norm();

    for (int n = 1; n <= steps; ++n) {
      const DenseVector inner = h1 + running.col(std::min(n, big_n));
      plan.theta_.col(grid.column(n)).head(m) = mat_exp(a, n * dt) * inner;
    }
  }
  for (int n = big_n; n <= steps; ++n) {
    plan.theta_tail_max_ =
        std::max(plan.theta_tail_max_, plan.theta_.col(grid.column(n)).norm());
  }

  const double limit = kPlanTolerance * (1.0 + h0.norm());
  if (!(plan.ll_residual_ <= limit)) {
    throw ConstraintViolation("build_plan: steering residual " +
                                  std::to_string(plan.ll_residual_) + " exceeds " +
                                  std::to_string(limit),
                              plan.ll_residual_);
  }
  return plan;
}

Segment theta_segment(const CouplingPlan& plan, double s) {
  const SimGrid& grid = plan.grid();
  const double horizon = grid.horizon();
  if (!(s >= -1e-12 * horizon && s <= horizon * (1.0 + 1e-12))) {
    throw InvalidArgument("theta_segment: s = " + std::to_string(s) + " outside [0, T]");
  }
  const double pos = s / grid.dt;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) < 1e-9) {
    const SegmentView v = plan.theta_window(static_cast<int>(rounded));
    return Segment(Eigen::Map<const DenseMatrix>(v.data(), v.dim(), v.n_hist() + 1), v.r0());
  }
  const DenseMatrix& theta = plan.theta();
  const int last = static_cast<int>(theta.cols()) - 1;
  return Segment::from_function(
      static_cast<int>(theta.rows()), grid.n_hist, grid.r0(), [&](double th) {
        const double p = std::clamp((s + th) / grid.dt + grid.n_hist, 0.0,
                                    static_cast<double>(last));
        const int lo = std::min(static_cast<int>(std::floor(p)), last - 1);
        const double frac = p - lo;
        return StateVec((1.0 - frac) * theta.col(lo) + frac * theta.col(lo + 1));
      });
}

CouplingIdentityCheck check_coupling_identity(const PathBundle& base,
                                              const PathBundle& shifted,
                                              const CouplingPlan& plan, double eps) {
  if (base.states.rows() != shifted.states.rows() ||
      base.states.cols() != shifted.states.cols() || !plan.matches(base.grid) ||
      !plan.matches(shifted.grid)) {
    throw InvalidArgument("check_coupling_identity: mismatched grids");
  }
  CouplingIdentityCheck out;
  const DenseMatrix& theta = plan.theta();
  const int first_terminal = base.grid.column(base.grid.n_steps - base.grid.n_hist);
  for (Eigen::Index c = 0; c < base.states.cols(); ++c) {
    const double err = (shifted.states.col(c) - base.states.col(c) - eps * theta.col(c)).norm();
    out.sup_error = std::max(out.sup_error, err);
    if (c >= first_terminal) {
      out.terminal_error =
          std::max(out.terminal_error, (shifted.states.col(c) - base.states.col(c)).norm());
    }
  }
  return out;
}

double observed_order(double coarse_error, double fine_error) {
  if (!(coarse_error > 0.0) || !(fine_error > 0.0)) {
    throw InvalidArgument("observed_order: errors must be positive");
  }
  return std::log2(coarse_error / fine_error);
}

namespace detail {

GirsanovRecord girsanov_weight(const ModelSpec& model, const CouplingPlan& plan,
                               const DenseMatrix& states, const DenseMatrix& increments,
                               double eps, GirsanovScratch& scratch) {
  const SimGrid& grid = plan.grid();
  const int m = model.m();
  const int d = model.d();
  const int dim = m + d;
  scratch.shifted = states + eps * plan.theta();

  const auto& coeffs = model.coeffs();
  const SmallMat& sigma_inv = model.sigma_inv();
  const StateVec h2 = plan.h2_at_zero();
  GirsanovRecord rec;
  StateVec x(m), y(d), xs(m), ys(d), phi(d), u(d);
  for (int n = 0; n < grid.n_steps; ++n) {
    const int col = grid.column(n);
    x = states.col(col).head(m);
    y = states.col(col).tail(d);
    xs = scratch.shifted.col(col).head(m);
    ys = scratch.shifted.col(col).tail(d);
    const SegmentView seg(states.data() + static_cast<std::ptrdiff_t>(n) * dim, dim,
                          grid.n_hist, grid.r0());
    const SegmentView seg_s(scratch.shifted.data() + static_cast<std::ptrdiff_t>(n) * dim,
                            dim, grid.n_hist, grid.r0());
    phi = coeffs.z_value(x, y);
    phi -= coeffs.z_value(xs, ys);
    phi += coeffs.b_value(seg);
    phi -= coeffs.b_value(seg_s);
    phi += eps * (plan.v_prime()[n] * h2 + plan.alpha_prime().col(n));
    u.noalias() = sigma_inv * phi;
    rec.ito_term += u.dot(increments.col(n));
    rec.quad_term += u.squaredNorm() * grid.dt;
  }
  rec.log_r = -rec.ito_term - 0.5 * rec.quad_term;
  rec.finite = std::isfinite(rec.log_r);
  rec.r = rec.finite ? std::exp(rec.log_r) : std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(rec.r)) rec.finite = false;
  return rec;
}

}  // namespace detail

GirsanovRecord girsanov_weight(const ModelSpec& model, const CouplingPlan& plan,
                               const PathBundle& base, double eps) {
  if (!plan.matches(base.grid)) {
    throw InvalidArgument("girsanov_weight: plan and path use different grids");
  }
  detail::GirsanovScratch scratch;
  return detail::girsanov_weight(model, plan, base.states, base.noise.increments, eps,
                                 scratch);
}

}  // namespace fsde

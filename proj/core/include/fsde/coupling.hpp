#pragma once

#include <vector>

#include "fsde/matops.hpp"
#include "fsde/model.hpp"
#include "fsde/segment.hpp"
#include "fsde/simulate.hpp"

namespace fsde {

// Deterministic steering functions that make the solution started at
// xi + eps h coincide with the one started at xi from time tau = T - r0 on:
//   v(s)      = (tau - s)^+ / tau
//   g(s)      = s (tau - s)^+ / tau^2
//   alpha(s)  = -g(s) M^T e^{-s A^T} q,  q = Q^{-1}(h_1(0) + int_0^tau v e^{-rA} M h_2(0) dr)
//   phi(s)    = v(s) h_2(0) + alpha(s)
//   Theta(s)  = h(s) for s <= 0, (e^{As} h_1(0) + int_0^s e^{(s-r)A} M phi(r) dr, phi(s)) after.
// All sampled functions live on the simulation grid. Derivative samples at
// node n are the values on [t_n, t_{n+1}), so v'(tau) = alpha'(tau) = 0.
class CouplingPlan {
 public:
  const SimGrid& grid() const noexcept { return grid_; }
  double tau() const noexcept { return tau_; }
  int tau_index() const noexcept { return tau_index_; }
  const Segment& h() const noexcept { return h_; }
  StateVec h2_at_zero() const;

  const std::vector<double>& v() const noexcept { return v_; }
  const std::vector<double>& v_prime() const noexcept { return v_prime_; }
  const DenseMatrix& alpha() const noexcept { return alpha_; }              // d x (n_steps+1)
  const DenseMatrix& alpha_prime() const noexcept { return alpha_prime_; }  // d x (n_steps+1)
  const DenseMatrix& phi() const noexcept { return phi_; }                  // d x (n_steps+1)
  // dim x grid.columns(); column c is Theta((c - n_hist) dt).
  const DenseMatrix& theta() const noexcept { return theta_; }
  const DenseVector& q_inv_vec() const noexcept { return q_inv_vec_; }
  const GramianResult& gramian() const noexcept { return gramian_; }

  /// |h_1(0) + int_0^tau e^{-sA} M phi(s) ds| evaluated with the Gramian's
  /// quadrature weights.
  double ll_residual() const noexcept { return ll_residual_; }
  /// max over s in [tau, T] of |Theta(s)|.
  double theta_tail_max() const noexcept { return theta_tail_max_; }

  /// Window theta -> Theta(t_n + theta) as a view into theta().
  SegmentView theta_window(int n) const {
    return {theta_.data() + static_cast<std::ptrdiff_t>(n) * theta_.rows(),
            static_cast<int>(theta_.rows()), grid_.n_hist, grid_.r0()};
  }

  bool matches(const SimGrid& grid) const noexcept {
    return grid.n_steps == grid_.n_steps && grid.n_hist == grid_.n_hist &&
           grid.dt == grid_.dt;
  }

 private:
  friend CouplingPlan build_plan(const ModelSpec&, const Segment&, const SimGrid&);

  SimGrid grid_;
  double tau_ = 0.0;
  int tau_index_ = 0;
  Segment h_{1, 1, 1.0};
  std::vector<double> v_;
  std::vector<double> v_prime_;
  DenseMatrix alpha_;
  DenseMatrix alpha_prime_;
  DenseMatrix phi_;
  DenseMatrix theta_;
  DenseVector q_inv_vec_;
  GramianResult gramian_;
  double ll_residual_ = 0.0;
  double theta_tail_max_ = 0.0;
};

inline constexpr double kPlanTolerance = 1e-8;

/// Builds the plan for horizon grid.horizon() and direction h (sampled on the
/// grid's history). Throws NotPositiveDefinite when the Gramian is singular
/// and ConstraintViolation when the steering residual exceeds
/// kPlanTolerance * (1 + |h(0)|).
CouplingPlan build_plan(const ModelSpec& model, const Segment& h, const SimGrid& grid);

/// Theta on the window [s - r0, s], interpolated when s is off-grid.
Segment theta_segment(const CouplingPlan& plan, double s);

struct CouplingIdentityCheck {
  double sup_error = 0.0;       // max_t |shifted - base - eps Theta|
  double terminal_error = 0.0;  // max over [T - r0, T] of |shifted - base|
};

/// Compares a shifted path against base + eps Theta on every grid time.
CouplingIdentityCheck check_coupling_identity(const PathBundle& base,
                                              const PathBundle& shifted,
                                              const CouplingPlan& plan, double eps);

/// log2(err(dt) / err(dt / 2)).
double observed_order(double coarse_error, double fine_error);

struct GirsanovRecord {
  double log_r = 0.0;
  double r = 1.0;
  double ito_term = 0.0;   // sum <sigma^{-1} Phi(t_n), dB_n>
  double quad_term = 0.0;  // sum |sigma^{-1} Phi(t_n)|^2 dt
  bool finite = true;
};

/// Density of the shifted measure along a base path; shifted states are
/// base + eps Theta.
GirsanovRecord girsanov_weight(const ModelSpec& model, const CouplingPlan& plan,
                               const PathBundle& base, double eps);

namespace detail {

// Scratch space reused across paths by Monte Carlo workers.
struct GirsanovScratch {
  DenseMatrix shifted;
};

GirsanovRecord girsanov_weight(const ModelSpec& model, const CouplingPlan& plan,
                               const DenseMatrix& states, const DenseMatrix& increments,
                               double eps, GirsanovScratch& scratch);

}  // namespace detail

}  // namespace fsde

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "fsde/segment.hpp"
#include "fsde/types.hpp"

namespace fsde {

// Drift coefficients of
//   dX = (A X + M Y) dt,
//   dY = (Z(X, Y) + b(X_t, Y_t)) dt + sigma dB,
// with directional derivatives. All maps must be pure: they are called
// concurrently from path workers.
struct CoefficientOracle {
  std::function<StateVec(const StateVec& x, const StateVec& y)> z_value;
  // direction is an (m + d)-vector.
  std::function<StateVec(const StateVec& x, const StateVec& y,
                         const StateVec& direction)>
      z_dir;
  std::function<StateVec(const SegmentView& segment)> b_value;
  std::function<StateVec(const SegmentView& segment,
                         const SegmentView& direction)>
      b_dir;
  // b depends on the segment only through its oldest node, theta = -r0.
  bool discrete_delay = false;
};

/// Central difference (f(p + step u) - f(p - step u)) / (2 step).
StateVec fd_directional(const std::function<StateVec(const StateVec&)>& f,
                        const StateVec& point, const StateVec& direction,
                        double step);

/// Default step sqrt(machine epsilon) * (1 + ||point||).
double default_fd_step(double point_norm);

/// Fills missing z_dir / b_dir with central differences at the default step.
CoefficientOracle with_fd_derivatives(CoefficientOracle oracle, int m, int d);

struct ModelDefinition {
  std::string name;
  int m = 0;
  int d = 1;
  double r0 = 1.0;
  DenseMatrix a;      // m x m
  DenseMatrix mm;     // m x d
  DenseMatrix sigma;  // d x d
  CoefficientOracle coeffs;
};

// Validated, immutable model instance.
class ModelSpec {
 public:
  /// Validates dimensions, sigma invertibility (sigma * sigma^{-1} = I to
  /// 1e-10), the Kalman rank condition and r0 > 0. Missing derivative maps
  /// are filled by central differences.
  explicit ModelSpec(ModelDefinition def);

  const std::string& name() const noexcept { return name_; }
  int m() const noexcept { return m_; }
  int d() const noexcept { return d_; }
  int dim() const noexcept { return m_ + d_; }
  double r0() const noexcept { return r0_; }
  const SmallMat& a() const noexcept { return a_; }
  const SmallMat& mm() const noexcept { return mm_; }
  const SmallMat& sigma() const noexcept { return sigma_; }
  const SmallMat& sigma_inv() const noexcept { return sigma_inv_; }
  const CoefficientOracle& coeffs() const noexcept { return coeffs_; }
  int k_star() const noexcept { return k_star_; }
  /// Operator 2-norm of M (0 when m = 0).
  double m_norm() const noexcept { return m_norm_; }

 private:
  std::string name_;
  int m_;
  int d_;
  double r0_;
  SmallMat a_;
  SmallMat mm_;
  SmallMat sigma_;
  SmallMat sigma_inv_;
  CoefficientOracle coeffs_;
  int k_star_ = 0;
  double m_norm_ = 0.0;
};

using TwoPointMap = std::function<double(const StateVec& z, const StateVec& zp)>;
using PointMap = std::function<double(const StateVec& z)>;

// Lyapunov data used by the assumption checkers. z = (x, y) in R^{m+d}.
// Optional maps are empty std::functions when absent.
struct LyapunovSuite {
  int m = 0;
  int d = 1;
  double r0 = 1.0;
  PointMap w_value;                                      // W >= 1
  std::function<StateVec(const StateVec& z)> w_grad2;    // gradient of W in y
  PointMap l_w;                                          // L W (no b term)
  // Two-point generator LW(z; z') = L W(z) + <b~(z'), grad_y W(z)> for
  // discrete-delay models.
  TwoPointMap two_point_l_w;
  // The first-order part of the two-point generator as displayed alongside
  // the E21-bound inequality (no Ito correction); see verify.
  TwoPointMap two_point_l_w_first_order;
  TwoPointMap e21_displayed_bound;
  PointMap u_value;                          // U(x, y) >= 0 used by the E21 check
  std::function<double(double)> u_increment; // increasing U used by the A3' and A4' checks
  PointMap w_tilde_log;                      // log W~
  TwoPointMap l_w_tilde_ratio;               // LW~ / W~
  // Coefficient access for the A2-A4 and E25 checks.
  std::function<StateVec(const StateVec& x, const StateVec& y)> z_value;
  std::function<StateVec(const SegmentView&)> b_value;
  std::function<StateVec(const StateVec& z)> b_tilde;  // discrete delay only
  std::map<std::string, double> constants;

  /// Named constant; throws InvalidArgument when missing.
  double constant(const std::string& key) const;
  /// constants["<key>_<which>"] if present, else constants[key].
  double constant_for(const std::string& key, const std::string& which) const;
  bool has_constant(const std::string& key) const {
    return constants.count(key) != 0;
  }
};

struct ModelWithSuite {
  std::shared_ptr<const ModelSpec> model;
  LyapunovSuite suite;
};

/// dX = -(X + Y) dt,
/// dY = dB + (-eps Y^3 + Y(t - r0) + int_{-r0}^0 w(theta) X(t + theta) dtheta) dt,
/// with W = 1 + x^2 + y^2, l = 1. The delay integral uses the trapezoid rule
/// on the segment grid.
ModelWithSuite make_example_4_1(double eps, const SampledFunction& delay_weight,
                                double r0);

/// dX = -(X + Y) dt,
/// dY = dB + (-Y^3 + Y(t - r0)^3 / 4 + X / 2 - Y) dt,
/// with W = 1 + x^2 + y^4, U = y^6, w = (x^2 + y^4)/4 + xy/10, W~ = exp(w - inf w).
ModelWithSuite make_example_4_2(double r0 = 0.5);

/// Ornstein-Uhlenbeck benchmark without a degenerate component:
/// m = 0, Z(y) = -rate * y, b = 0, sigma = 1.
ModelWithSuite make_ou_benchmark(double r0 = 0.5, double rate = 1.0);

}  // namespace fsde

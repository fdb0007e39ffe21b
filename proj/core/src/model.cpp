#include "fsde/model.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "fsde/errors.hpp"
#include "fsde/matops.hpp"

namespace fsde {

StateVec fd_directional(const std::function<StateVec(const StateVec&)>& f,
                        const StateVec& point, const StateVec& direction,
                        double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InvalidArgument("fd_directional: step must be positive and finite");
  }
  if (point.size() != direction.size()) {
    throw InvalidArgument("fd_directional: point and direction sizes differ");
  }
  const StateVec plus = point + step * direction;
  const StateVec minus = point - step * direction;
  const StateVec fp = f(plus);
  const StateVec fm = f(minus);
  if (!fp.allFinite() || !fm.allFinite()) {
    throw InvalidArgument("fd_directional: non-finite evaluation");
  }
  return (fp - fm) / (2.0 * step);
}

double default_fd_step(double point_norm) {
  return std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + point_norm);
}

CoefficientOracle with_fd_derivatives(CoefficientOracle oracle, int m, int d) {
  if (!oracle.z_dir && oracle.z_value) {
    auto z = oracle.z_value;
    oracle.z_dir = [z, m, d](const StateVec& x, const StateVec& y,
                             const StateVec& u) {
      StateVec p(m + d);
      p << x, y;
      auto f = [&z, m, d](const StateVec& q) -> StateVec {
        return z(q.head(m), q.tail(d));
      };
      return fd_directional(f, p, u, default_fd_step(p.norm()));
    };
  }
  if (!oracle.b_dir && oracle.b_value) {
    auto b = oracle.b_value;
    oracle.b_dir = [b](const SegmentView& seg, const SegmentView& dir) {
      const Eigen::Index cols = seg.n_hist() + 1;
      Eigen::Map<const DenseMatrix> base(seg.data(), seg.dim(), cols);
      Eigen::Map<const DenseMatrix> du(dir.data(), dir.dim(), cols);
      const double step = default_fd_step(seg.sup_norm());
      const DenseMatrix plus = base + step * du;
      const DenseMatrix minus = base - step * du;
      const StateVec fp = b(SegmentView(plus.data(), seg.dim(), seg.n_hist(), seg.r0()));
      const StateVec fm = b(SegmentView(minus.data(), seg.dim(), seg.n_hist(), seg.r0()));
      if (!fp.allFinite() || !fm.allFinite()) {
        throw InvalidArgument("fd_directional: non-finite evaluation of b");
      }
      return StateVec((fp - fm) / (2.0 * step));
    };
  }
  return oracle;
}

ModelSpec::ModelSpec(ModelDefinition def)
    : name_(std::move(def.name)), m_(def.m), d_(def.d), r0_(def.r0) {
  if (m_ < 0 || d_ < 1 || m_ + d_ > kMaxDim) {
    throw InvalidArgument("model: need m >= 0, d >= 1 and m + d <= " +
                          std::to_string(kMaxDim));
  }
  if (!(r0_ > 0.0) || !std::isfinite(r0_)) {
    throw InvalidArgument("model: r0 must be positive");
  }
  if (def.a.size() == 0 && m_ == 0) def.a = DenseMatrix(0, 0);
  if (def.mm.size() == 0 && m_ == 0) def.mm = DenseMatrix(0, d_);
  if (def.a.rows() != m_ || def.a.cols() != m_) {
    throw InvalidArgument("model: A must be m x m");
  }
  if (def.mm.rows() != m_ || def.mm.cols() != d_) {
    throw InvalidArgument("model: M must be m x d");
  }
  if (def.sigma.rows() != d_ || def.sigma.cols() != d_) {
    throw InvalidArgument("model: sigma must be d x d");
  }
  if (!def.a.allFinite() || !def.mm.allFinite() || !def.sigma.allFinite()) {
    throw InvalidArgument("model: non-finite matrix entries");
  }
  if (!def.coeffs.z_value || !def.coeffs.b_value) {
    throw InvalidArgument("model: Z and b value maps are required");
  }

  Eigen::FullPivLU<DenseMatrix> lu(def.sigma);
  if (!lu.isInvertible()) {
    throw InvalidArgument("model: sigma is not invertible");
  }
  const DenseMatrix sigma_inv = lu.inverse();
  const double residual =
      (def.sigma * sigma_inv - DenseMatrix::Identity(d_, d_)).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10)) {
    throw InvalidArgument("model: sigma * sigma^{-1} deviates from identity by " +
                          std::to_string(residual));
  }

  const KalmanRank kr = kalman_rank(def.a, def.mm);
  if (!kr.satisfied) {
    throw InvalidArgument("model: rank condition Rank[M, AM, ..., A^k M] = m fails (rank " +
                          std::to_string(kr.rank) + " < m = " + std::to_string(m_) + ")");
  }
  k_star_ = kr.k_star.value_or(0);
  if (m_ > 0) {
    Eigen::JacobiSVD<DenseMatrix> svd(def.mm);
    m_norm_ = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  }

  a_ = def.a;
  mm_ = def.mm;
  sigma_ = def.sigma;
  sigma_inv_ = sigma_inv;
  coeffs_ = with_fd_derivatives(std::move(def.coeffs), m_, d_);
}

double LyapunovSuite::constant(const std::string& key) const {
  const auto it = constants.find(key);
  if (it == constants.end()) {
    throw InvalidArgument("Lyapunov suite: missing constant '" + key + "'");
  }
  return it->second;
}

double LyapunovSuite::constant_for(const std::string& key,
                                   const std::string& which) const {
  const auto it = constants.find(key + "_" + which);
  return it != constants.end() ? it->second : constant(key);
}

namespace {

StateVec vec1(double v) {
  StateVec out(1);
  out(0) = v;
  return out;
}

}  // namespace

ModelWithSuite make_example_4_1(double eps, const SampledFunction& delay_weight,
                                double r0) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw InvalidArgument("example 4.1: eps must be >= 0");
  }
  if (std::abs(delay_weight.r0() - r0) > 1e-12 * r0) {
    throw InvalidArgument("example 4.1: delay weight is defined on a different window");
  }

  ModelDefinition def;
  def.name = "example-4.1";
  def.m = 1;
  def.d = 1;
  def.r0 = r0;
  def.a = DenseMatrix::Constant(1, 1, -1.0);
  def.mm = DenseMatrix::Constant(1, 1, -1.0);
  def.sigma = DenseMatrix::Identity(1, 1);

  def.coeffs.z_value = [eps](const StateVec&, const StateVec& y) {
    return vec1(-eps * y(0) * y(0) * y(0));
  };
  def.coeffs.z_dir = [eps](const StateVec&, const StateVec& y, const StateVec& u) {
    return vec1(-3.0 * eps * y(0) * y(0) * u(1));
  };
  // int w(theta) xi_1(theta) dtheta (trapezoid) + xi_2(-r0); linear in xi, so
  // the directional derivative is the same map applied to the direction.
  auto linear_b = [delay_weight](const SegmentView& seg) {
    const int n = seg.n_hist();
    const double h = seg.step();
    double integral = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double theta = -seg.r0() + j * h;
      const double wj = (j == 0 || j == n) ? 0.5 * h : h;
      integral += wj * delay_weight(theta) * seg.value(j, 0);
    }
    return vec1(integral + seg.value(0, 1));
  };
  def.coeffs.b_value = linear_b;
  def.coeffs.b_dir = [linear_b](const SegmentView&, const SegmentView& dir) {
    return linear_b(dir);
  };

  ModelWithSuite out;
  out.model = std::make_shared<const ModelSpec>(std::move(def));

  LyapunovSuite& s = out.suite;
  s.m = 1;
  s.d = 1;
  s.r0 = r0;
  s.w_value = [](const StateVec& z) { return 1.0 + z(0) * z(0) + z(1) * z(1); };
  s.w_grad2 = [](const StateVec& z) { return vec1(2.0 * z(1)); };
  s.l_w = [eps](const StateVec& z) {
    const double x = z(0), y = z(1);
    return 1.0 - 2.0 * x * (x + y) - 2.0 * eps * y * y * y * y;
  };
  s.u_increment = [](double r) { return r * r; };
  s.z_value = out.model->coeffs().z_value;
  s.b_value = out.model->coeffs().b_value;
  const double lip_b = delay_weight.integral_abs() + 1.0;
  const double lip_z = 5.0 * std::max(eps, 0.2);
  s.constants = {
      {"lambda", 3.0},
      {"l", 1.0},
      {"delta", 4.0},
      {"lambda_A3", lip_z},
      {"lambda_A3'", lip_z},
      {"lambda_A4", lip_b},
      {"lambda_A4'", lip_b},
  };
  return out;
}

ModelWithSuite make_example_4_2(double r0) {
  ModelDefinition def;
  def.name = "example-4.2";
  def.m = 1;
  def.d = 1;
  def.r0 = r0;
  def.a = DenseMatrix::Constant(1, 1, -1.0);
  def.mm = DenseMatrix::Constant(1, 1, -1.0);
  def.sigma = DenseMatrix::Identity(1, 1);

  def.coeffs.z_value = [](const StateVec& x, const StateVec& y) {
    const double yy = y(0);
    return vec1(0.5 * x(0) - yy - yy * yy * yy);
  };
  def.coeffs.z_dir = [](const StateVec&, const StateVec& y, const StateVec& u) {
    const double yy = y(0);
    return vec1(0.5 * u(0) - u(1) - 3.0 * yy * yy * u(1));
  };
  def.coeffs.b_value = [](const SegmentView& seg) {
    const double yd = seg.value(0, 1);
    return vec1(0.25 * yd * yd * yd);
  };
  def.coeffs.b_dir = [](const SegmentView& seg, const SegmentView& dir) {
    const double yd = seg.value(0, 1);
    return vec1(0.75 * yd * yd * dir.value(0, 1));
  };
  def.coeffs.discrete_delay = true;

  ModelWithSuite out;
  out.model = std::make_shared<const ModelSpec>(std::move(def));

  LyapunovSuite& s = out.suite;
  s.m = 1;
  s.d = 1;
  s.r0 = r0;
  s.w_value = [](const StateVec& z) {
    const double y2 = z(1) * z(1);
    return 1.0 + z(0) * z(0) + y2 * y2;
  };
  s.w_grad2 = [](const StateVec& z) { return vec1(4.0 * z(1) * z(1) * z(1)); };
  // L W = <Ax + My, d_x W> + <Z, d_y W> + (1/2) d_y^2 W.
  s.l_w = [](const StateVec& z) {
    const double x = z(0), y = z(1);
    const double y3 = y * y * y;
    return -2.0 * x * (x + y) + 4.0 * y3 * (0.5 * x - y - y3) + 6.0 * y * y;
  };
  s.two_point_l_w = [lw = s.l_w](const StateVec& z, const StateVec& zp) {
    const double y3 = z(1) * z(1) * z(1);
    const double yp3 = zp(1) * zp(1) * zp(1);
    return lw(z) + 4.0 * y3 * 0.25 * yp3;
  };
  s.two_point_l_w_first_order = [](const StateVec& z, const StateVec& zp) {
    const double x = z(0), y = z(1);
    const double y3 = y * y * y;
    const double yp3 = zp(1) * zp(1) * zp(1);
    return -2.0 * x * (x + y) + 4.0 * y3 * (0.5 * x - y - y3 + 0.25 * yp3);
  };
  s.e21_displayed_bound = [](const StateVec& z, const StateVec& zp) {
    const double y2 = z(1) * z(1);
    const double yp2 = zp(1) * zp(1);
    return y2 - 4.0 * y2 * y2 - 2.5 * y2 * y2 * y2 + 0.5 * yp2 * yp2 * yp2;
  };
  s.u_value = [](const StateVec& z) {
    const double y2 = z(1) * z(1);
    return y2 * y2 * y2;
  };
  // w = (x^2 + y^4)/4 + xy/10 attains its infimum -1e-4 at x = -y/5, y^2 = 0.02.
  constexpr double kInfW = -1e-4;
  s.w_tilde_log = [](const StateVec& z) {
    const double x = z(0), y = z(1);
    return 0.25 * (x * x + y * y * y * y) + 0.1 * x * y - kInfW;
  };
  // LW~/W~ = L log W~ + (1/2) |d_y log W~|^2.
  s.l_w_tilde_ratio = [](const StateVec& z, const StateVec& zp) {
    const double x = z(0), y = z(1), yp = zp(1);
    const double wx = 0.5 * x + 0.1 * y;
    const double wy = y * y * y + 0.1 * x;
    const double wyy = 3.0 * y * y;
    const double drift_y = 0.5 * x - y - y * y * y + 0.25 * yp * yp * yp;
    return -wx * (x + y) + wy * drift_y + 0.5 * wyy + 0.5 * wy * wy;
  };
  s.z_value = out.model->coeffs().z_value;
  s.b_value = out.model->coeffs().b_value;
  s.b_tilde = [](const StateVec& zp) {
    const double y = zp(1);
    return vec1(0.25 * y * y * y);
  };
  s.constants = {
      {"lyap_alpha", 1.0},
      {"beta", 2.5},
      {"gamma", 0.5},
      {"nu", 50.0},
      {"l", 0.5},
      {"e28_lambda2", 0.0},
      {"e28_lambda4", 0.1375},
  };
  return out;
}

ModelWithSuite make_ou_benchmark(double r0, double rate) {
  ModelDefinition def;
  def.name = "ou";
  def.m = 0;
  def.d = 1;
  def.r0 = r0;
  def.a = DenseMatrix(0, 0);
  def.mm = DenseMatrix(0, 1);
  def.sigma = DenseMatrix::Identity(1, 1);
  def.coeffs.z_value = [rate](const StateVec&, const StateVec& y) {
    return vec1(-rate * y(0));
  };
  def.coeffs.z_dir = [rate](const StateVec&, const StateVec&, const StateVec& u) {
    return vec1(-rate * u(0));
  };
  def.coeffs.b_value = [](const SegmentView&) { return vec1(0.0); };
  def.coeffs.b_dir = [](const SegmentView&, const SegmentView&) { return vec1(0.0); };
  def.coeffs.discrete_delay = true;

  ModelWithSuite out;
  out.model = std::make_shared<const ModelSpec>(std::move(def));
  LyapunovSuite& s = out.suite;
  s.m = 0;
  s.d = 1;
  s.r0 = r0;
  s.w_value = [](const StateVec& z) { return 1.0 + z(0) * z(0); };
  s.w_grad2 = [](const StateVec& z) { return vec1(2.0 * z(0)); };
  s.l_w = [rate](const StateVec& z) { return 1.0 - 2.0 * rate * z(0) * z(0); };
  s.u_increment = [](double) { return 0.0; };
  s.z_value = out.model->coeffs().z_value;
  s.b_value = out.model->coeffs().b_value;
  s.b_tilde = [](const StateVec&) { return vec1(0.0); };
  s.constants = {
      {"lambda", std::max(1.0, std::abs(rate))},
      {"l", 0.0},
      {"delta", 4.0},
  };
  return out;
}

}  // namespace fsde

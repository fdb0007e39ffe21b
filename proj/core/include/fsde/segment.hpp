#pragma once

#include <functional>
#include <vector>

#include "fsde/types.hpp"

namespace fsde {

// Non-owning view of a function on [-r0, 0] with values in R^dim, sampled at
// theta_j = -r0 + j * r0 / n_hist, j = 0..n_hist. Storage is column-major:
// node j occupies dim consecutive doubles starting at data + j * dim.
class SegmentView {
 public:
  SegmentView(const double* data, int dim, int n_hist, double r0);

  int dim() const noexcept { return dim_; }
  int n_hist() const noexcept { return n_hist_; }
  double r0() const noexcept { return r0_; }
  double step() const noexcept { return r0_ / n_hist_; }
  const double* data() const noexcept { return data_; }

  Eigen::Map<const Eigen::VectorXd> node(int j) const {
    return {data_ + static_cast<std::ptrdiff_t>(j) * dim_, dim_};
  }
  double value(int j, int component) const {
    return data_[static_cast<std::ptrdiff_t>(j) * dim_ + component];
  }
  // Value at theta = -r0 and theta = 0.
  Eigen::Map<const Eigen::VectorXd> oldest() const { return node(0); }
  Eigen::Map<const Eigen::VectorXd> newest() const { return node(n_hist_); }

  /// Linear interpolation; exact at nodes. Throws InvalidArgument outside
  /// [-r0, 0] (a relative slack of 1e-12 r0 is accepted at the ends).
  StateVec eval(double theta) const;

  /// max_theta |value(theta)| over the nodes (Euclidean norm per node).
  double sup_norm() const;

 private:
  const double* data_;
  int dim_;
  int n_hist_;
  double r0_;
};

// Owning segment on a uniform grid.
class Segment {
 public:
  Segment(int dim, int n_hist, double r0);
  Segment(DenseMatrix values, double r0);  // values: dim x (n_hist + 1)

  static Segment constant(const Eigen::Ref<const DenseVector>& value,
                          int n_hist, double r0);
  static Segment from_function(int dim, int n_hist, double r0,
                               const std::function<StateVec(double)>& fn);

  int dim() const noexcept { return static_cast<int>(values_.rows()); }
  int n_hist() const noexcept { return static_cast<int>(values_.cols()) - 1; }
  double r0() const noexcept { return r0_; }
  const DenseMatrix& values() const noexcept { return values_; }
  DenseMatrix& values() noexcept { return values_; }

  SegmentView view() const {
    return {values_.data(), dim(), n_hist(), r0_};
  }
  StateVec eval(double theta) const { return view().eval(theta); }
  double sup_norm() const { return view().sup_norm(); }

  /// Same function re-sampled (by interpolation) on a grid with n_hist nodes.
  Segment resampled(int n_hist) const;

  Segment operator+(const Segment& other) const;
  Segment operator*(double c) const;

 private:
  DenseMatrix values_;
  double r0_;
};

// Scalar function on [-r0, 0] on a uniform grid; linear interpolation.
class SampledFunction {
 public:
  SampledFunction(std::vector<double> values, double r0);
  static SampledFunction constant(double value, double r0);

  double operator()(double theta) const;
  double r0() const noexcept { return r0_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double sup_abs() const;
  /// int_{-r0}^0 |f(theta)| d theta by the trapezoid rule on the own grid.
  double integral_abs() const;

 private:
  std::vector<double> values_;
  double r0_;
};

}  // namespace fsde

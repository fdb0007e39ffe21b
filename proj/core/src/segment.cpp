#include "fsde/segment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsde/errors.hpp"

namespace fsde {

SegmentView::SegmentView(const double* data, int dim, int n_hist, double r0)
    : data_(data), dim_(dim), n_hist_(n_hist), r0_(r0) {
  if (n_hist < 1) throw InvalidArgument("segment: n_hist must be >= 1");
  if (!(r0 > 0.0)) throw InvalidArgument("segment: r0 must be positive");
  if (dim < 0 || dim > kMaxDim) {
    throw InvalidArgument("segment: dimension out of range");
  }
}

StateVec SegmentView::eval(double theta) const {
  const double slack = 1e-12 * r0_;
  if (!(theta >= -r0_ - slack && theta <= slack)) {
    throw InvalidArgument("segment: theta = " + std::to_string(theta) +
                          " outside [-r0, 0]");
  }
  double pos = std::clamp((theta + r0_) / step(), 0.0,
                          static_cast<double>(n_hist_));
  if (std::abs(pos - std::round(pos)) < 1e-9) pos = std::round(pos);
  const int lo = std::min(static_cast<int>(std::floor(pos)), n_hist_ - 1);
  const double frac = pos - lo;
  StateVec out(dim_);
  if (frac == 0.0) {
    out = node(lo);
  } else if (frac == 1.0) {
    out = node(lo + 1);
  } else {
    out = (1.0 - frac) * node(lo) + frac * node(lo + 1);
  }
  return out;
}

double SegmentView::sup_norm() const {
  double best = 0.0;
  for (int j = 0; j <= n_hist_; ++j) best = std::max(best, node(j).norm());
  return best;
}

Segment::Segment(int dim, int n_hist, double r0)
    : values_(DenseMatrix::Zero(dim, n_hist + 1)), r0_(r0) {
  (void)view();  // validates
}

Segment::Segment(DenseMatrix values, double r0)
    : values_(std::move(values)), r0_(r0) {
  (void)view();
  if (!values_.allFinite()) {
    throw InvalidArgument("segment: non-finite values");
  }
}

Segment Segment::constant(const Eigen::Ref<const DenseVector>& value,
                          int n_hist, double r0) {
  DenseMatrix values(value.size(), n_hist + 1);
  values.colwise() = value;
  return Segment(std::move(values), r0);
}

Segment Segment::from_function(int dim, int n_hist, double r0,
                               const std::function<StateVec(double)>& fn) {
  DenseMatrix values(dim, n_hist + 1);
  for (int j = 0; j <= n_hist; ++j) {
    const double theta = -r0 + j * (r0 / n_hist);
    const StateVec v = fn(j == n_hist ? 0.0 : theta);
    if (v.size() != dim) throw InvalidArgument("segment: function returned wrong size");
    values.col(j) = v;
  }
  return Segment(std::move(values), r0);
}

Segment Segment::resampled(int n_hist) const {
  if (n_hist == this->n_hist()) return *this;
  const SegmentView v = view();
  return from_function(dim(), n_hist, r0_,
                       [&v](double theta) { return v.eval(theta); });
}

Segment Segment::operator+(const Segment& other) const {
  if (other.values_.rows() != values_.rows() ||
      other.values_.cols() != values_.cols() ||
      std::abs(other.r0_ - r0_) > 1e-12 * r0_) {
    throw InvalidArgument("segment: adding segments on different grids");
  }
  return Segment(values_ + other.values_, r0_);
}

Segment Segment::operator*(double c) const { return Segment(values_ * c, r0_); }

SampledFunction::SampledFunction(std::vector<double> values, double r0)
    : values_(std::move(values)), r0_(r0) {
  if (values_.size() < 2) {
    throw InvalidArgument("sampled function: need at least two nodes");
  }
  if (!(r0 > 0.0)) throw InvalidArgument("sampled function: r0 must be positive");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("sampled function: non-finite value");
  }
}

SampledFunction SampledFunction::constant(double value, double r0) {
  return SampledFunction({value, value}, r0);
}

double SampledFunction::operator()(double theta) const {
  const int n = static_cast<int>(values_.size()) - 1;
  const double pos = std::clamp((theta + r0_) / (r0_ / n), 0.0,
                                static_cast<double>(n));
  const int lo = std::min(static_cast<int>(std::floor(pos)), n - 1);
  const double frac = pos - lo;
  return (1.0 - frac) * values_[lo] + frac * values_[lo + 1];
}

double SampledFunction::sup_abs() const {
  double best = 0.0;
  for (double v : values_) best = std::max(best, std::abs(v));
  return best;
}

double SampledFunction::integral_abs() const {
  const int n = static_cast<int>(values_.size()) - 1;
  const double h = r0_ / n;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    sum += 0.5 * h * (std::abs(values_[j]) + std::abs(values_[j + 1]));
  }
  return sum;
}

}  // namespace fsde

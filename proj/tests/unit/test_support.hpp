#pragma once

#include <initializer_list>

#include "fsde/model.hpp"
#include "fsde/segment.hpp"

namespace fsde::testing {

inline Segment constant_segment(std::initializer_list<double> v, int n_hist, double r0) {
  DenseVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x(i++) = c;
  return Segment::constant(x, n_hist, r0);
}

inline ModelWithSuite example_41(double eps = 0.1, double r0 = 0.5) {
  return make_example_4_1(eps, SampledFunction::constant(1.0, r0), r0);
}

// m = d = 1, A = 0, M = 1, Z = 0, b = 0.
inline ModelSpec integrator_chain(double r0 = 0.5) {
  ModelDefinition def;
  def.name = "chain";
  def.m = 1;
  def.d = 1;
  def.r0 = r0;
  def.a = DenseMatrix::Zero(1, 1);
  def.mm = DenseMatrix::Ones(1, 1);
  def.sigma = DenseMatrix::Identity(1, 1);
  def.coeffs.z_value = [](const StateVec&, const StateVec&) { return StateVec::Zero(1); };
  def.coeffs.b_value = [](const SegmentView&) { return StateVec::Zero(1); };
  return ModelSpec(def);
}

}  // namespace fsde::testing

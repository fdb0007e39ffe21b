#pragma once

#include <optional>
#include <vector>

#include "fsde/types.hpp"

namespace fsde {

/// exp(t * a) by scaling-and-squaring on a truncated Taylor series.
///
/// Relative accuracy is about 1e-12 for ||t a|| <= 50. Throws InvalidArgument
/// for a non-square matrix or non-finite input.
DenseMatrix mat_exp(const Eigen::Ref<const DenseMatrix>& a, double t);

struct KalmanRank {
  int rank = 0;
  std::optional<int> k_star;  // smallest k with Rank[M, AM, ..., A^k M] = m
  bool satisfied = false;
};

inline constexpr double kDefaultRankTolerance = 1e-10;

/// Numerical rank of [M, AM, ..., A^{m-1} M]. Singular values above
/// tol * (largest singular value) count. m = 0 is satisfied by convention.
KalmanRank kalman_rank(const Eigen::Ref<const DenseMatrix>& a,
                       const Eigen::Ref<const DenseMatrix>& mm,
                       double tol = kDefaultRankTolerance);

struct GramianResult {
  DenseMatrix q;
  DenseMatrix inverse;
  double condition_estimate = 0.0;  // 2-norm condition number of q
  double inverse_norm = 0.0;        // ||q^{-1}||_2
  // inverse_norm / (t ^ 1)^{-2(k+1)}; diagnostic only.
  double bound_ratio = 0.0;
};

/// Weighted controllability Gramian
///   Q = int_0^{min(t_horizon, tau)} g(s) e^{-sA} M M^T e^{-sA^T} ds,
///   g(s) = s (tau - s)^+ / tau^2,
/// by composite Simpson at quad_step. Throws NotPositiveDefinite when the
/// Cholesky factorization fails or a pivot is numerically zero.
GramianResult gramian(const Eigen::Ref<const DenseMatrix>& a,
                      const Eigen::Ref<const DenseMatrix>& mm,
                      double t_horizon, double tau, double quad_step);

namespace quadrature {

/// Weights w_j, j = 0..n, so that sum_j w_j f(j h) approximates
/// int_0^{n h} f. Composite Simpson for even n; odd n >= 3 closes the last
/// interval with the 3-point rule (h/12)(-f[n-2] + 8 f[n-1] + 5 f[n]);
/// n = 1 is the trapezoid rule.
std::vector<double> simpson_weights(int n, double h);

/// Number of intervals of length h in [0, length]; throws unless h divides
/// length to relative tolerance 1e-9.
int interval_count(double length, double h);

/// Running integrals of column samples f_0..f_n (one column per node).
/// Column j of the result approximates the integral over [0, j h]: even j by
/// composite Simpson, odd j by adding a 3-point piece for the last interval.
/// The last column equals the simpson_weights(n, h) sum up to rounding.
DenseMatrix cumulative_simpson(const Eigen::Ref<const DenseMatrix>& samples,
                               double h);

}  // namespace quadrature

}  // namespace fsde

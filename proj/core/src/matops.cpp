#include "fsde/matops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fsde/errors.hpp"

namespace fsde {

namespace {

void require_finite(const Eigen::Ref<const DenseMatrix>& a, const char* what) {
  if (!a.allFinite()) {
    throw InvalidArgument(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

DenseMatrix mat_exp(const Eigen::Ref<const DenseMatrix>& a, double t) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("mat_exp: matrix is not square");
  }
  if (!std::isfinite(t)) {
    throw InvalidArgument("mat_exp: non-finite time");
  }
  require_finite(a, "mat_exp");
  const Eigen::Index n = a.rows();
  if (n == 0) {
    return DenseMatrix(0, 0);
  }

  DenseMatrix b = t * a;
  const double norm = b.cwiseAbs().colwise().sum().maxCoeff();
  // Scale so that ||b / 2^s||_1 <= 1/2; the Taylor remainder is then below
  // 2^-52 after ~18 terms.
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  b /= std::ldexp(1.0, squarings);

  DenseMatrix result = DenseMatrix::Identity(n, n);
  DenseMatrix term = DenseMatrix::Identity(n, n);
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int k = 1; k <= 30; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= kEps * 1e-2 * result.cwiseAbs().maxCoeff()) {
      break;
    }
  }
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }
  return result;
}

KalmanRank kalman_rank(const Eigen::Ref<const DenseMatrix>& a,
                       const Eigen::Ref<const DenseMatrix>& mm, double tol) {
  const Eigen::Index m = a.rows();
  if (a.cols() != m || mm.rows() != m) {
    throw InvalidArgument("kalman_rank: dimension mismatch (A is " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + ", M has " +
                          std::to_string(mm.rows()) + " rows)");
  }
  require_finite(a, "kalman_rank");
  require_finite(mm, "kalman_rank");
  KalmanRank out;
  if (m == 0) {
    out.rank = 0;
    out.k_star = 0;
    out.satisfied = true;
    return out;
  }
  const Eigen::Index d = mm.cols();
  DenseMatrix stacked(m, m * d);
  DenseMatrix block = mm;
  for (Eigen::Index k = 0; k < m; ++k) {
    stacked.middleCols(k * d, d) = block;
    block = a * block;
  }

  auto numerical_rank = [tol](const DenseMatrix& mat) {
    if (mat.size() == 0) return 0;
    Eigen::JacobiSVD<DenseMatrix> svd(mat);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    const double cutoff = tol * sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cutoff) ++r;
    }
    return r;
  };

  for (Eigen::Index k = 0; k < m; ++k) {
    const int r = numerical_rank(stacked.leftCols((k + 1) * d));
    if (r == m) {
      out.k_star = static_cast<int>(k);
      break;
    }
  }
  out.rank = numerical_rank(stacked);
  out.satisfied = out.rank == m;
  return out;
}

namespace quadrature {

int interval_count(double length, double h) {
  if (!(h > 0.0) || !std::isfinite(h) || !(length >= 0.0)) {
    throw InvalidArgument("quadrature: step must be positive and length non-negative");
  }
  const double ratio = length / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument("quadrature: step " + std::to_string(h) +
                          " does not divide length " + std::to_string(length));
  }
  return static_cast<int>(rounded);
}

std::vector<double> simpson_weights(int n, double h) {
  if (n < 0) throw InvalidArgument("simpson_weights: negative interval count");
  std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
  if (n == 0) return w;
  if (n == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const int even = (n % 2 == 0) ? n : n - 1;
  for (int j = 0; j + 2 <= even; j += 2) {
    w[j] += h / 3.0;
    w[j + 1] += 4.0 * h / 3.0;
    w[j + 2] += h / 3.0;
  }
  if (even != n) {
    w[n - 2] += -h / 12.0;
    w[n - 1] += 8.0 * h / 12.0;
    w[n] += 5.0 * h / 12.0;
  }
  return w;
}

DenseMatrix cumulative_simpson(const Eigen::Ref<const DenseMatrix>& samples,
                               double h) {
  const Eigen::Index cols = samples.cols();
  DenseMatrix out = DenseMatrix::Zero(samples.rows(), cols);
  if (cols <= 1) return out;
  const Eigen::Index n = cols - 1;
  for (Eigen::Index j = 1; j <= n; ++j) {
    if (j % 2 == 0) {
      out.col(j) = out.col(j - 2) + (h / 3.0) * (samples.col(j - 2) +
                                                 4.0 * samples.col(j - 1) +
                                                 samples.col(j));
    } else if (j >= 3) {
      out.col(j) = out.col(j - 1) + (h / 12.0) * (-samples.col(j - 2) +
                                                  8.0 * samples.col(j - 1) +
                                                  5.0 * samples.col(j));
    } else if (n == 1) {
      out.col(1) = 0.5 * h * (samples.col(0) + samples.col(1));
    } else {
      out.col(1) = (h / 12.0) * (5.0 * samples.col(0) + 8.0 * samples.col(1) -
                                 samples.col(2));
    }
  }
  return out;
}

}  // namespace quadrature

GramianResult gramian(const Eigen::Ref<const DenseMatrix>& a,
                      const Eigen::Ref<const DenseMatrix>& mm, double t_horizon,
                      double tau, double quad_step) {
  const Eigen::Index m = a.rows();
  if (a.cols() != m || mm.rows() != m) {
    throw InvalidArgument("gramian: dimension mismatch");
  }
  if (!(tau > 0.0) || !(t_horizon > 0.0)) {
    throw InvalidArgument("gramian: tau and t_horizon must be positive");
  }
  const double upper = std::min(t_horizon, tau);
  const int n = quadrature::interval_count(upper, quad_step);
  if (n < 1) throw InvalidArgument("gramian: horizon shorter than one step");
  const std::vector<double> w = quadrature::simpson_weights(n, quad_step);

  GramianResult out;
  out.q = DenseMatrix::Zero(m, m);
  if (m == 0) {
    out.inverse = DenseMatrix(0, 0);
    out.condition_estimate = 1.0;
    return out;
  }
  const DenseMatrix mmt = mm * mm.transpose();
  for (int j = 0; j <= n; ++j) {
    const double s = j * quad_step;
    const double g = s * std::max(tau - s, 0.0) / (tau * tau);
    if (g == 0.0 || w[j] == 0.0) continue;
    const DenseMatrix e = mat_exp(a, -s);
    out.q.noalias() += (w[j] * g) * (e * mmt * e.transpose());
  }
  out.q = 0.5 * (out.q + out.q.transpose()).eval();

  Eigen::LLT<DenseMatrix> llt(out.q);
  const double scale = out.q.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0.0)) {
    throw NotPositiveDefinite(
        "gramian: Q is not positive definite (rank condition fails at this horizon)");
  }
  const DenseVector diag = llt.matrixLLT().diagonal();
  const double min_pivot_sq = diag.cwiseAbs2().minCoeff();
  if (!(min_pivot_sq > 1e-13 * scale)) {
    throw NotPositiveDefinite(
        "gramian: Q is numerically singular (smallest Cholesky pivot^2 = " +
        std::to_string(min_pivot_sq) + ")");
  }
  out.inverse = llt.solve(DenseMatrix::Identity(m, m));

  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(out.q, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  out.condition_estimate = lmax / lmin;
  out.inverse_norm = 1.0 / lmin;

  const KalmanRank kr = kalman_rank(a, mm);
  const int k = kr.k_star.value_or(static_cast<int>(m) - 1);
  const double reference = std::pow(std::min(upper, 1.0), -2.0 * (k + 1));
  out.bound_ratio = out.inverse_norm / reference;
  return out;
}

}  // namespace fsde

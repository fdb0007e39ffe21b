#pragma once

#include <Eigen/Core>

namespace fsde {

// Upper bound on m + d for the fixed-capacity state types used in hot loops.
inline constexpr int kMaxDim = 8;

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

// Stack-allocated vectors and matrices with runtime size <= kMaxDim.
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SmallMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

}  // namespace fsde

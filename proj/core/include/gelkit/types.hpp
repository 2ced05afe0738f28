#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace gelkit {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observations stored one per row; regression models put the response first.
using DataMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace gelkit

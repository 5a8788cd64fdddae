// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace hclip {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Agent states: one row per agent.
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace hclip

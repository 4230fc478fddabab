#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace drpanel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Binary 0/1 matrices (treatment paths). Stored as int so Eigen reductions stay exact.
using BinaryMatrix = Eigen::MatrixXi;
using IntVector = Eigen::VectorXi;

}  // namespace drpanel

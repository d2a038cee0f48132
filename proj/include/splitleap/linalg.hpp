#pragma once

#include <Eigen/Dense>

namespace splitleap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace splitleap

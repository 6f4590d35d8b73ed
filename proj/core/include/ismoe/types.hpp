#pragma once

#include <Eigen/Dense>

namespace ismoe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace ismoe

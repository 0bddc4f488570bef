#pragma once

#include <Eigen/Core>

namespace dspect {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace dspect

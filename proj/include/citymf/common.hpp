#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace citymf {

using Index = std::ptrdiff_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace citymf

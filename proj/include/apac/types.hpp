#pragma once

#include <Eigen/Dense>

namespace apac {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector4d;
using Eigen::VectorXd;
using Vector6d = Eigen::Matrix<double, 6, 1>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace apac

#pragma once

#include <Eigen/Dense>

namespace fedfleet {

/// Row-major so sample rows are contiguous (matches IDX layout and numpy).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

}  // namespace fedfleet

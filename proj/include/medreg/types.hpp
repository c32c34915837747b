#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace medreg {

using Scalar = double;

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;

using Tokens = std::vector<std::string>;

}  // namespace medreg

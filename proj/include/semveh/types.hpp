#pragma once

#include <Eigen/Dense>

namespace semveh {

using Scalar = double;
using Index = Eigen::Index;

static constexpr int Dynamic = Eigen::Dynamic;

template <int rows = Dynamic, int cols = rows>
using Matrix = Eigen::Matrix<Scalar, rows, cols>;

template <int rows = Dynamic>
using Vector = Matrix<rows, 1>;

template <int rows = Dynamic, int cols = rows>
using Array = Eigen::Array<Scalar, rows, cols>;

template <int rows = Dynamic>
using ArrayVector = Array<rows, 1>;

template <int rows = Dynamic, int cols = rows>
using MatrixInt = Eigen::Matrix<int, rows, cols>;

template <int rows = Dynamic>
using VectorInt = MatrixInt<rows, 1>;

template <class Derived>
using Ref = Eigen::Ref<Derived>;

template <class Derived>
using ConstRef = const Eigen::Ref<const Derived>&;

}  // namespace semveh

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace retrieve {

using Scalar = double;

template <typename T, int rows>
using Vector = Eigen::Matrix<T, rows, 1>;

using Vec2 = Vector<Scalar, 2>;
using Vec3 = Vector<Scalar, 3>;

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatrixXs = MatrixX<Scalar>;
using VectorXs = VectorX<Scalar>;

using ObjectId = int;

}  // namespace retrieve

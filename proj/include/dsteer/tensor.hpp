/*
 Copyright 2026 The dsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef DSTEER_TENSOR_HPP_
#define DSTEER_TENSOR_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace dsteer {

/// Row-major dense matrix; rows index batch samples throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/**
 * @brief Dense array of 64-bit floats with an explicit shape.
 *
 * Construction from external data rejects NaN and Inf. Rank is at most two,
 * which is all the steering code needs; rank-0 tensors hold one scalar.
 */
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor from_matrix(const Matrix& m);

  Matrix to_matrix() const;

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::span<const double> data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }

  double operator[](std::size_t i) const { return data_.at(i); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Throws DimensionError unless `m` has the given shape. `what` labels the message.
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what);

/// Throws ContractError when any entry is NaN or Inf.
void require_finite(const Matrix& m, const char* what);

}  // namespace dsteer

#endif  // DSTEER_TENSOR_HPP_

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

#include "dsteer/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "dsteer/errors.hpp"

namespace dsteer {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) throw DimensionError("Tensor: rank above 2 is not supported");
  const std::size_t expected =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  if (expected != data_.size()) {
    throw DimensionError("Tensor: shape product " + std::to_string(expected) +
                         " does not match data length " + std::to_string(data_.size()));
  }
  for (double x : data_) {
    if (!std::isfinite(x)) throw ContractError("Tensor: non-finite entry");
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::from_matrix(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::move(data));
}

Matrix Tensor::to_matrix() const {
  Eigen::Index rows = 1;
  Eigen::Index cols = 1;
  if (rank() == 1) {
    cols = static_cast<Eigen::Index>(shape_[0]);
  } else if (rank() == 2) {
    rows = static_cast<Eigen::Index>(shape_[0]);
    cols = static_cast<Eigen::Index>(shape_[1]);
  }
  Matrix m(rows, cols);
  std::copy(data_.begin(), data_.end(), m.data());
  return m;
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ContractError(std::string(what) + ": non-finite entry");
}

}  // namespace dsteer

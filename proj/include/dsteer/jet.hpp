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

#ifndef DSTEER_JET_HPP_
#define DSTEER_JET_HPP_

#include <functional>
#include <optional>
#include <span>

#include "dsteer/tape.hpp"

namespace dsteer {

/**
 * @brief A batch of points (B x n) together with k tangent directions (k*B x n).
 *
 * Tangent row j*B + b is the directional derivative of row b along seed j.
 * Every tangent update is itself recorded on the tape, so Jacobians built this
 * way can be differentiated again in the reverse sweep.
 */
class Jet {
 public:
  explicit Jet(Var value) : value_(std::move(value)) {}
  Jet(Var value, Var tangent);

  /// One seed per input coordinate: tangent block j is the unit vector e_j on every row.
  static Jet seeded(const Var& x);

  const Var& value() const noexcept { return value_; }
  bool has_tangent() const noexcept { return tangent_.has_value(); }
  const Var& tangent() const { return *tangent_; }
  Eigen::Index batch() const { return value_.rows(); }
  Eigen::Index directions() const { return has_tangent() ? tangent_->rows() / batch() : 0; }

 private:
  Var value_;
  std::optional<Var> tangent_;
};

Jet operator+(const Jet& a, const Jet& b);
Jet scale(const Jet& a, double factor);
Jet add_scalar(const Jet& a, double offset);
/// x W^T + b.
Jet affine(const Jet& x, const Var& weight, const Var& bias);
/// x M^T.
Jet linear(const Jet& x, const Var& matrix);
Jet tanh(const Jet& a);
/// softplus(x) - log 2: zero at the origin with slope in (0, 1).
Jet shifted_softplus(const Jet& a);
Jet square(const Jet& a);
Jet sqrt(const Jet& a);
Jet column(const Jet& a, Eigen::Index j);
Jet hcat(std::span<const Jet> parts);

using JetMap = std::function<Jet(const Jet&)>;

/// Exact Jacobian (n x n, entry (i, j) = d f_i / d x_j) of `map` at the 1 x n row `x`.
Var jacobian(const JetMap& map, const Var& x);

}  // namespace dsteer

#endif  // DSTEER_JET_HPP_

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

#include "dsteer/jet.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "dsteer/errors.hpp"

namespace dsteer {

Jet::Jet(Var value, Var tangent) : value_(std::move(value)), tangent_(std::move(tangent)) {
  const Eigen::Index b = value_.rows();
  if (b == 0 || tangent_->cols() != value_.cols() || tangent_->rows() % b != 0) {
    throw DimensionError("Jet: tangent shape does not match value");
  }
}

Jet Jet::seeded(const Var& x) {
  const Eigen::Index b = x.rows();
  const Eigen::Index n = x.cols();
  Matrix seeds = Matrix::Zero(n * b, n);
  for (Eigen::Index j = 0; j < n; ++j) seeds.block(j * b, j, b, 1).setOnes();
  return Jet(x, x.tape().constant(std::move(seeds)));
}

Jet operator+(const Jet& a, const Jet& b) {
  Var v = add(a.value(), b.value());
  if (a.has_tangent() && b.has_tangent()) return Jet(v, add(a.tangent(), b.tangent()));
  if (a.has_tangent()) return Jet(v, a.tangent());
  if (b.has_tangent()) return Jet(v, b.tangent());
  return Jet(v);
}

Jet scale(const Jet& a, double factor) {
  Var v = scale(a.value(), factor);
  if (!a.has_tangent()) return Jet(v);
  return Jet(v, scale(a.tangent(), factor));
}

Jet add_scalar(const Jet& a, double offset) {
  Var v = add_scalar(a.value(), offset);
  if (!a.has_tangent()) return Jet(v);
  return Jet(v, a.tangent());
}

Jet affine(const Jet& x, const Var& weight, const Var& bias) {
  Var v = add_bias(matmul_nt(x.value(), weight), bias);
  if (!x.has_tangent()) return Jet(v);
  return Jet(v, matmul_nt(x.tangent(), weight));
}

Jet linear(const Jet& x, const Var& matrix) {
  Var v = matmul_nt(x.value(), matrix);
  if (!x.has_tangent()) return Jet(v);
  return Jet(v, matmul_nt(x.tangent(), matrix));
}

Jet tanh(const Jet& a) {
  Var h = tanh(a.value());
  if (!a.has_tangent()) return Jet(h);
  return Jet(h, tiled_mul(tanh_derivative(h), a.tangent()));
}

Jet shifted_softplus(const Jet& a) {
  Var s = softplus(a.value());
  Var v = add_scalar(s, -std::numbers::ln2);
  if (!a.has_tangent()) return Jet(v);
  // sigmoid(z) = exp(z - softplus(z))
  Var slope = exp(sub(a.value(), s));
  return Jet(v, tiled_mul(slope, a.tangent()));
}

Jet square(const Jet& a) {
  Var v = square(a.value());
  if (!a.has_tangent()) return Jet(v);
  return Jet(v, tiled_mul(scale(a.value(), 2.0), a.tangent()));
}

Jet sqrt(const Jet& a) {
  Var v = sqrt(a.value());
  if (!a.has_tangent()) return Jet(v);
  return Jet(v, tiled_mul(scale(rsqrt(a.value()), 0.5), a.tangent()));
}

Jet column(const Jet& a, Eigen::Index j) {
  Var v = column(a.value(), j);
  if (!a.has_tangent()) return Jet(v);
  return Jet(v, column(a.tangent(), j));
}

Jet hcat(std::span<const Jet> parts) {
  if (parts.empty()) throw ContractError("hcat: no inputs");
  std::vector<Var> values;
  std::vector<Var> tangents;
  bool any_tangent = false;
  Eigen::Index directions = 0;
  for (const Jet& p : parts) {
    values.push_back(p.value());
    if (p.has_tangent()) {
      if (any_tangent && p.directions() != directions) {
        throw DimensionError("hcat: tangent direction counts differ");
      }
      any_tangent = true;
      directions = p.directions();
    }
  }
  Var v = hcat(values);
  if (!any_tangent) return Jet(v);
  Tape& tape = v.tape();
  for (const Jet& p : parts) {
    tangents.push_back(p.has_tangent()
                           ? p.tangent()
                           : tape.constant(Matrix::Zero(directions * p.batch(), p.value().cols())));
  }
  return Jet(v, hcat(tangents));
}

Var jacobian(const JetMap& map, const Var& x) {
  if (x.rows() != 1) throw DimensionError("jacobian: expected a single 1 x n point");
  const Eigen::Index n = x.cols();
  if (n > 16) throw DimensionError("jacobian: dimension above 16");
  Jet out = map(Jet::seeded(x));
  if (out.value().cols() != n) {
    throw DimensionError("jacobian: map output dimension " + std::to_string(out.value().cols()) +
                         " differs from input dimension " + std::to_string(n));
  }
  if (!out.has_tangent()) return x.tape().constant(Matrix::Zero(n, n));
  // Tangent row j holds column j of the Jacobian.
  return transpose(out.tangent());
}

}  // namespace dsteer

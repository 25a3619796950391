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

#ifndef DSTEER_TAPE_HPP_
#define DSTEER_TAPE_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <vector>

#include "dsteer/tensor.hpp"

namespace dsteer {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape is alive and not cleared.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradient of a scalar output with respect to every parameter leaf of a tape.
class Gradient {
 public:
  const Matrix& operator[](const Var& leaf) const { return at(leaf.id()); }
  const Matrix& at(std::size_t leaf_id) const;
  bool contains(std::size_t leaf_id) const { return entries_.contains(leaf_id); }
  std::size_t size() const noexcept { return entries_.size(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  friend class Tape;
  std::map<std::size_t, Matrix> entries_;
};

/**
 * @brief Append-only record of matrix-valued operations for reverse-mode differentiation.
 *
 * Nodes are appended in evaluation order, so inputs always precede the nodes
 * that consume them and one reverse sweep visits each node once. Values stay
 * on the tape after backward() so the same graph can be differentiated again.
 * A tape is single-threaded; use one tape per worker.
 */
class Tape {
 public:
  /// Propagates `grad` (the adjoint of node `self`) into the node's inputs via accumulate().
  using BackwardFn = std::function<void(Tape& tape, std::size_t self, const Matrix& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value);
  /// A leaf that receives an entry in every Gradient.
  Var parameter(Matrix value);

  /// Appends a primitive. `backward` may be empty when no input requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  /// Reverse sweep from a 1x1 node. Throws ContractError for non-scalar outputs.
  Gradient backward(const Var& output);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }

  /// Adds `expr` to the adjoint of node `id`; no-op for nodes that do not require gradients.
  template <typename Expr>
  void accumulate(std::size_t id, const Expr& expr) {
    if (!nodes_[id].requires_grad) return;
    Matrix& g = grads_[id];
    if (g.size() == 0) {
      g = expr;
    } else {
      g += expr;
    }
  }

 private:
  struct Node {
    Matrix value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool parameter = false;
  };

  std::deque<Node> nodes_;
  std::vector<Matrix> grads_;
};

// Primitive operations. All inputs must live on the same tape.

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
/// Elementwise (Hadamard) product.
Var mul(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
/// a * b^T, the layout of a dense layer applied to row-major batches.
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Adds the 1xC row `bias` to every row of `a`.
Var add_bias(const Var& a, const Var& bias);

Var tanh(const Var& a);
/// 1 - h^2 for h = tanh(z): the derivative of tanh expressed through its output.
Var tanh_derivative(const Var& h);
Var softplus(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var rsqrt(const Var& a);
Var square(const Var& a);

Var sum(const Var& a);
Var squared_norm(const Var& a);
Var row_sum(const Var& a);
Var row_squared_norm(const Var& a);
Var logsumexp_rows(const Var& a);

/// Multiplies each of the k row blocks of `t` (k*B x C) elementwise by `d` (B x C).
Var tiled_mul(const Var& d, const Var& t);
Var column(const Var& a, Eigen::Index j);
Var hcat(std::span<const Var> parts);

/**
 * Log-determinants of B stacked dim x dim matrices. Row j*B + b of `t` is row j of
 * matrix b. Returns a Bx1 node. Determinants must be positive; a non-positive or
 * numerically vanishing (|det| < 1e-300) determinant raises SingularityError.
 * The backward pass uses d log det M = tr(M^{-1} dM).
 */
Var batched_logdet(const Var& t, Eigen::Index dim);
/// log det of a single square matrix node (1x1 result).
Var logdet(const Var& m);

/// W / max(1, u^T W v) with power-iteration vectors u, v held constant.
Var spectral_normalized(const Var& w, const Vector& left, const Vector& right);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }

/// Vectorized tanh used by both the tape and plain evaluators.
Matrix tanh_values(const Matrix& z);

}  // namespace dsteer

#endif  // DSTEER_TAPE_HPP_

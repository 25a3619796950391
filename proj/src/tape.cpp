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

#include "dsteer/tape.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dsteer/errors.hpp"

namespace dsteer {

namespace {

// log(1e-300)
constexpr double kMinLogDet = -690.7755278982137;

Tape& common_tape(const Var& a, const Var& b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
  return a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("Var::scalar: node is not 1x1");
  return v(0, 0);
}

const Matrix& Gradient::at(std::size_t leaf_id) const {
  auto it = entries_.find(leaf_id);
  if (it == entries_.end()) throw ContractError("Gradient: node is not a parameter leaf");
  return it->second;
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("Tape::record: input from another tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradient Tape::backward(const Var& output) {
  if (&output.tape() != this) throw ContractError("Tape::backward: output from another tape");
  if (output.value().size() != 1) throw ContractError("Tape::backward: output is not a scalar");

  grads_.assign(nodes_.size(), Matrix());
  if (nodes_[output.id()].requires_grad) grads_[output.id()] = Matrix::Ones(1, 1);

  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.parameter || grads_[i].size() == 0 || !node.backward) continue;
    node.backward(*this, i, grads_[i]);
    grads_[i] = Matrix();
  }

  Gradient result;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].parameter) continue;
    Matrix g = grads_[i].size() == 0 ? Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols())
                                     : std::move(grads_[i]);
    result.entries_.emplace(i, std::move(g));
  }
  grads_.clear();
  return result;
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
}

Matrix tanh_values(const Matrix& z) {
  // Overflow of exp(2z) saturates to +1, underflow to -1.
  return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "add");
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& tape, std::size_t, const Matrix& g) {
                    tape.accumulate(ia, g);
                    tape.accumulate(ib, g);
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  return t.record(a.value() - b.value(), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& tape, std::size_t, const Matrix& g) {
                    tape.accumulate(ia, g);
                    tape.accumulate(ib, -g);
                  });
}

Var scale(const Var& a, double factor) {
  return a.tape().record(a.value() * factor, {a},
                         [ia = a.id(), factor](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ia, factor * g);
                         });
}

Var add_scalar(const Var& a, double offset) {
  return a.tape().record((a.value().array() + offset).matrix(), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ia, g);
                         });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  return t.record(a.value().cwiseProduct(b.value()), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& tape, std::size_t, const Matrix& g) {
                    if (tape.requires_grad(ia)) tape.accumulate(ia, g.cwiseProduct(tape.value(ib)));
                    if (tape.requires_grad(ib)) tape.accumulate(ib, g.cwiseProduct(tape.value(ia)));
                  });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  Matrix out;
  out.noalias() = a.value() * b.value();
  return t.record(std::move(out), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& tape, std::size_t, const Matrix& g) {
                    if (tape.requires_grad(ia)) {
                      Matrix ga;
                      ga.noalias() = g * tape.value(ib).transpose();
                      tape.accumulate(ia, ga);
                    }
                    if (tape.requires_grad(ib)) {
                      Matrix gb;
                      gb.noalias() = tape.value(ia).transpose() * g;
                      tape.accumulate(ib, gb);
                    }
                  });
}

Var matmul_nt(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()) + " differ");
  }
  Matrix out;
  out.noalias() = a.value() * b.value().transpose();
  return t.record(std::move(out), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& tape, std::size_t, const Matrix& g) {
                    if (tape.requires_grad(ia)) {
                      Matrix ga;
                      ga.noalias() = g * tape.value(ib);
                      tape.accumulate(ia, ga);
                    }
                    if (tape.requires_grad(ib)) {
                      Matrix gb;
                      gb.noalias() = g.transpose() * tape.value(ia);
                      tape.accumulate(ib, gb);
                    }
                  });
}

Var transpose(const Var& a) {
  return a.tape().record(a.value().transpose(), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ia, g.transpose());
                         });
}

Var add_bias(const Var& a, const Var& bias) {
  Tape& t = common_tape(a, bias, "add_bias");
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_bias: bias must be 1x" + std::to_string(a.cols()));
  }
  Matrix out = a.value();
  out.rowwise() += bias.value().row(0);
  return t.record(std::move(out), {a, bias},
                  [ia = a.id(), ib = bias.id()](Tape& tape, std::size_t, const Matrix& g) {
                    tape.accumulate(ia, g);
                    if (tape.requires_grad(ib)) tape.accumulate(ib, g.colwise().sum());
                  });
}

Var tanh(const Var& a) {
  return a.tape().record(tanh_values(a.value()), {a},
                         [ia = a.id()](Tape& tape, std::size_t self, const Matrix& g) {
                           const Matrix& h = tape.value(self);
                           tape.accumulate(ia, (g.array() * (1.0 - h.array().square())).matrix());
                         });
}

Var tanh_derivative(const Var& h) {
  return h.tape().record((1.0 - h.value().array().square()).matrix(), {h},
                         [ih = h.id()](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ih, (-2.0 * g.array() * tape.value(ih).array()).matrix());
                         });
}

Var softplus(const Var& a) {
  const auto x = a.value().array();
  Matrix out = (x.max(0.0) + ((-x.abs()).exp()).log1p()).matrix();
  return a.tape().record(std::move(out), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           const auto z = tape.value(ia).array();
                           tape.accumulate(ia, (g.array() / (1.0 + (-z).exp())).matrix());
                         });
}

Var exp(const Var& a) {
  return a.tape().record(a.value().array().exp().matrix(), {a},
                         [ia = a.id()](Tape& tape, std::size_t self, const Matrix& g) {
                           tape.accumulate(ia, g.cwiseProduct(tape.value(self)));
                         });
}

Var log(const Var& a) {
  return a.tape().record(a.value().array().log().matrix(), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ia, g.cwiseQuotient(tape.value(ia)));
                         });
}

Var sqrt(const Var& a) {
  return a.tape().record(a.value().array().sqrt().matrix(), {a},
                         [ia = a.id()](Tape& tape, std::size_t self, const Matrix& g) {
                           tape.accumulate(ia, (0.5 * g.array() / tape.value(self).array()).matrix());
                         });
}

Var rsqrt(const Var& a) {
  return a.tape().record(a.value().array().rsqrt().matrix(), {a},
                         [ia = a.id()](Tape& tape, std::size_t self, const Matrix& g) {
                           // d/dx x^{-1/2} = -1/2 x^{-3/2} = -1/2 r^3
                           const auto r = tape.value(self).array();
                           tape.accumulate(ia, (-0.5 * g.array() * r.cube()).matrix());
                         });
}

Var square(const Var& a) {
  return a.tape().record(a.value().array().square().matrix(), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ia, (2.0 * g.array() * tape.value(ia).array()).matrix());
                         });
}

Var sum(const Var& a) {
  return a.tape().record(Matrix::Constant(1, 1, a.value().sum()), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           const Matrix& x = tape.value(ia);
                           tape.accumulate(ia, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                         });
}

Var squared_norm(const Var& a) {
  return a.tape().record(Matrix::Constant(1, 1, a.value().squaredNorm()), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           tape.accumulate(ia, (2.0 * g(0, 0)) * tape.value(ia));
                         });
}

Var row_sum(const Var& a) {
  return a.tape().record(a.value().rowwise().sum(), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           const Matrix& x = tape.value(ia);
                           Matrix gx(x.rows(), x.cols());
                           gx.colwise() = g.col(0);
                           tape.accumulate(ia, gx);
                         });
}

Var row_squared_norm(const Var& a) {
  return a.tape().record(a.value().rowwise().squaredNorm(), {a},
                         [ia = a.id()](Tape& tape, std::size_t, const Matrix& g) {
                           Matrix gx = 2.0 * tape.value(ia);
                           gx.array().colwise() *= g.col(0).array();
                           tape.accumulate(ia, gx);
                         });
}

Var logsumexp_rows(const Var& a) {
  const Matrix& x = a.value();
  Eigen::VectorXd peak = x.rowwise().maxCoeff();
  Matrix shifted = x;
  shifted.colwise() -= peak;
  Matrix weights = shifted.array().exp().matrix();
  Eigen::VectorXd total = weights.rowwise().sum();
  Matrix out = (peak.array() + total.array().log()).matrix();
  weights.array().colwise() /= total.array();
  return a.tape().record(std::move(out), {a},
                         [ia = a.id(), softmax = std::move(weights)](Tape& tape, std::size_t,
                                                                      const Matrix& g) {
                           Matrix gx = softmax;
                           gx.array().colwise() *= g.col(0).array();
                           tape.accumulate(ia, gx);
                         });
}

Var tiled_mul(const Var& d, const Var& t) {
  Tape& tape = common_tape(d, t, "tiled_mul");
  const Eigen::Index b = d.rows();
  if (d.cols() != t.cols() || b == 0 || t.rows() % b != 0) {
    throw DimensionError("tiled_mul: tangent rows must be a multiple of the primal rows");
  }
  const Eigen::Index blocks = t.rows() / b;
  Matrix out(t.rows(), t.cols());
  for (Eigen::Index j = 0; j < blocks; ++j) {
    out.middleRows(j * b, b) = t.value().middleRows(j * b, b).cwiseProduct(d.value());
  }
  return tape.record(std::move(out), {d, t},
                     [id = d.id(), it = t.id(), b, blocks](Tape& tp, std::size_t, const Matrix& g) {
                       const Matrix& dv = tp.value(id);
                       const Matrix& tv = tp.value(it);
                       if (tp.requires_grad(it)) {
                         Matrix gt(g.rows(), g.cols());
                         for (Eigen::Index j = 0; j < blocks; ++j) {
                           gt.middleRows(j * b, b) = g.middleRows(j * b, b).cwiseProduct(dv);
                         }
                         tp.accumulate(it, gt);
                       }
                       if (tp.requires_grad(id)) {
                         Matrix gd = Matrix::Zero(b, g.cols());
                         for (Eigen::Index j = 0; j < blocks; ++j) {
                           gd += g.middleRows(j * b, b).cwiseProduct(tv.middleRows(j * b, b));
                         }
                         tp.accumulate(id, gd);
                       }
                     });
}

Var column(const Var& a, Eigen::Index j) {
  if (j < 0 || j >= a.cols()) throw IndexError("column: index out of range");
  return a.tape().record(a.value().col(j), {a},
                         [ia = a.id(), j](Tape& tape, std::size_t, const Matrix& g) {
                           const Matrix& x = tape.value(ia);
                           Matrix gx = Matrix::Zero(x.rows(), x.cols());
                           gx.col(j) = g.col(0);
                           tape.accumulate(ia, gx);
                         });
}

Var hcat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("hcat: no inputs");
  Tape& tape = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw DimensionError("hcat: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  return tape.record(std::move(out), parts,
                     [ids = std::move(ids), widths = std::move(widths)](Tape& tp, std::size_t,
                                                                       const Matrix& g) {
                       Eigen::Index off = 0;
                       for (std::size_t i = 0; i < ids.size(); ++i) {
                         if (tp.requires_grad(ids[i])) {
                           tp.accumulate(ids[i], g.middleCols(off, widths[i]));
                         }
                         off += widths[i];
                       }
                     });
}

Var batched_logdet(const Var& t, Eigen::Index dim) {
  if (dim <= 0 || t.cols() != dim || t.rows() % dim != 0) {
    throw DimensionError("batched_logdet: expected (dim*B) x dim rows with dim = " +
                         std::to_string(dim));
  }
  const Eigen::Index batch = t.rows() / dim;
  const Matrix& tv = t.value();
  Matrix out(batch, 1);
  // Row b holds the transposed inverse of matrix b, flattened row-major.
  Matrix inverse_t(batch, dim * dim);
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index j = 0; j < dim; ++j) m.row(j) = tv.row(j * batch + b);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const Eigen::MatrixXd& packed = lu.matrixLU();
    double log_abs = 0.0;
    double sign = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double d = packed(i, i);
      if (d == 0.0) throw SingularityError("batched_logdet: singular Jacobian");
      if (d < 0.0) sign = -sign;
      log_abs += std::log(std::abs(d));
    }
    if (log_abs < kMinLogDet) throw SingularityError("batched_logdet: numerically singular Jacobian");
    if (sign < 0.0) throw SingularityError("batched_logdet: negative Jacobian determinant");
    out(b, 0) = log_abs;
    const Eigen::MatrixXd inv_t = lu.inverse().transpose();
    for (Eigen::Index i = 0; i < dim; ++i) {
      inverse_t.row(b).segment(i * dim, dim) = inv_t.row(i);
    }
  }
  return t.tape().record(std::move(out), {t},
                         [it = t.id(), dim, batch, inv = std::move(inverse_t)](
                             Tape& tape, std::size_t, const Matrix& g) {
                           Matrix gt(dim * batch, dim);
                           for (Eigen::Index b = 0; b < batch; ++b) {
                             for (Eigen::Index j = 0; j < dim; ++j) {
                               gt.row(j * batch + b) = g(b, 0) * inv.row(b).segment(j * dim, dim);
                             }
                           }
                           tape.accumulate(it, gt);
                         });
}

Var logdet(const Var& m) {
  if (m.rows() != m.cols()) throw DimensionError("logdet: matrix is not square");
  return batched_logdet(m, m.rows());
}

Var spectral_normalized(const Var& w, const Vector& left, const Vector& right) {
  const Matrix& wv = w.value();
  if (left.size() != wv.rows() || right.size() != wv.cols()) {
    throw DimensionError("spectral_normalized: power-iteration vectors do not match weight");
  }
  const double sigma = left.dot(wv * right);
  if (sigma <= 1.0) {
    return w.tape().record(wv, {w}, [iw = w.id()](Tape& tape, std::size_t, const Matrix& g) {
      tape.accumulate(iw, g);
    });
  }
  Matrix outer = left * right.transpose();
  return w.tape().record(
      wv / sigma, {w},
      [iw = w.id(), sigma, outer = std::move(outer)](Tape& tape, std::size_t, const Matrix& g) {
        const double inner = g.cwiseProduct(tape.value(iw)).sum();
        tape.accumulate(iw, g / sigma - (inner / (sigma * sigma)) * outer);
      });
}

}  // namespace dsteer

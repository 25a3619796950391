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

#include "dsteer/systems.hpp"

#include <array>
#include <cmath>

#include "dsteer/errors.hpp"

namespace dsteer {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::Index residual_dim(const Residual& r) {
  return std::visit(Overloaded{[](const LinearResidual& l) { return l.matrix.rows(); },
                               [](const SaturatingResidual&) { return Eigen::Index{2}; }},
                    r);
}

}  // namespace

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

SystemSpec::SystemSpec(std::string name, Residual residual, std::vector<Matrix> inputs,
                       std::vector<double> drift_lipschitz, int horizon, double dt)
    : name_(std::move(name)),
      residual_(std::move(residual)),
      inputs_(std::move(inputs)),
      drift_lipschitz_(std::move(drift_lipschitz)),
      horizon_(horizon),
      dt_(dt) {
  if (horizon_ < 0) throw ConfigError("horizon", "must be nonnegative");
  n_ = residual_dim(residual_);
  if (const auto* lin = std::get_if<LinearResidual>(&residual_)) {
    require_shape(lin->matrix, n_, n_, "SystemSpec residual matrix");
  }
  auto per_step = [&](std::size_t size, const char* what) {
    if (size != 1 && size != static_cast<std::size_t>(horizon_)) {
      throw DimensionError(std::string("SystemSpec: ") + what + " needs 1 or horizon entries");
    }
  };
  per_step(inputs_.size(), "input matrices");
  per_step(drift_lipschitz_.size(), "drift Lipschitz constants");
  m_ = inputs_.front().cols();
  for (const Matrix& b : inputs_) {
    require_shape(b, n_, m_, "SystemSpec input matrix");
    const double sigma = spectral_norm(b);
    if (!(sigma > 0.0)) throw ConfigError("input_matrix", "spectral norm must be positive");
    input_norms_.push_back(sigma);
  }
  for (double l : drift_lipschitz_) {
    if (!(l >= 0.0 && l < 1.0)) {
      throw ConfigError("drift_lipschitz", "residual drift must be a contraction (L < 1)");
    }
  }
}

void SystemSpec::check_step(int k) const {
  if (k < 0 || k >= horizon_) {
    throw IndexError("step " + std::to_string(k) + " outside [0, " + std::to_string(horizon_) + ")");
  }
}

const Matrix& SystemSpec::input_matrix(int k) const {
  check_step(k);
  return inputs_[slot(inputs_.size(), k)];
}

double SystemSpec::drift_lipschitz(int k) const {
  check_step(k);
  return drift_lipschitz_[slot(drift_lipschitz_.size(), k)];
}

double SystemSpec::input_norm(int k) const {
  check_step(k);
  return input_norms_[slot(input_norms_.size(), k)];
}

SystemSpec SystemSpec::with_horizon(int horizon) const {
  if (inputs_.size() != 1 || drift_lipschitz_.size() != 1) {
    throw ContractError("with_horizon: only time-invariant systems can change horizon");
  }
  return SystemSpec(name_, residual_, inputs_, drift_lipschitz_, horizon, dt_);
}

Matrix SystemSpec::residual(int k, const Matrix& x) const {
  check_step(k);
  if (x.cols() != n_) throw DimensionError("residual: state dimension mismatch");
  return std::visit(
      Overloaded{[&](const LinearResidual& l) -> Matrix { return x * l.matrix.transpose(); },
                 [&](const SaturatingResidual& s) -> Matrix {
                   Matrix out(x.rows(), 2);
                   out.col(0) = s.gain * (1.0 + x.col(1).array().square()).sqrt();
                   out.col(1) = s.gain * x.col(0);
                   return out;
                 }},
      residual_);
}

Jet SystemSpec::residual(int k, const Jet& x) const {
  check_step(k);
  if (x.value().cols() != n_) throw DimensionError("residual: state dimension mismatch");
  return std::visit(
      Overloaded{[&](const LinearResidual& l) { return linear(x, x.value().tape().constant(l.matrix)); },
                 [&](const SaturatingResidual& s) {
                   Jet y = column(x, 1);
                   std::array<Jet, 2> parts{scale(sqrt(add_scalar(square(y), 1.0)), s.gain),
                                            scale(column(x, 0), s.gain)};
                   return hcat(parts);
                 }},
      residual_);
}

Matrix SystemSpec::residual_jacobian(int k, const Vector& x) const {
  check_step(k);
  if (x.size() != n_) throw DimensionError("residual_jacobian: state dimension mismatch");
  return std::visit(Overloaded{[&](const LinearResidual& l) -> Matrix { return l.matrix; },
                               [&](const SaturatingResidual& s) -> Matrix {
                                 Matrix j = Matrix::Zero(2, 2);
                                 j(0, 1) = s.gain * x(1) / std::sqrt(1.0 + x(1) * x(1));
                                 j(1, 0) = s.gain;
                                 return j;
                               }},
                    residual_);
}

Matrix SystemSpec::drift_step(int k, const Matrix& x) const { return x + residual(k, x); }

Var SystemSpec::drift_step(int k, const Var& x) const { return add(x, residual(k, Jet(x)).value()); }

std::optional<Matrix> SystemSpec::linear_dynamics() const {
  const auto* lin = std::get_if<LinearResidual>(&residual_);
  if (lin == nullptr || inputs_.size() != 1) return std::nullopt;
  return Matrix(Matrix::Identity(n_, n_) + lin->matrix);
}

SystemSpec double_integrator_2d(double dt, int horizon) {
  if (!(dt > 0.0 && dt < 1.0)) throw ConfigError("dt", "must lie in (0, 1)");
  Matrix residual = Matrix::Zero(4, 4);
  residual.block(0, 2, 2, 2) = dt * Matrix::Identity(2, 2);
  Matrix b = Matrix::Zero(4, 2);
  b.block(2, 0, 2, 2) = dt * Matrix::Identity(2, 2);
  return SystemSpec("double_integrator_2d", LinearResidual{residual}, {b}, {dt}, horizon, dt);
}

SystemSpec saturating_drift_2d(int horizon, double input_gain) {
  if (!(input_gain > 0.0)) throw ConfigError("input_gain", "must be positive");
  Matrix b = Matrix::Zero(2, 1);
  b(0, 0) = input_gain;
  return SystemSpec("saturating_drift_2d", SaturatingResidual{0.1}, {b}, {0.1}, horizon, 0.1);
}

SystemSpec single_integrator(Eigen::Index dim, double dt, int horizon) {
  if (dim < 1) throw ConfigError("state_dim", "must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
  return SystemSpec("single_integrator", LinearResidual{Matrix::Zero(dim, dim)},
                    {Matrix(dt * Matrix::Identity(dim, dim))}, {0.0}, horizon, dt);
}

SystemSpec linear_system(const Matrix& a, const Matrix& b, int horizon, double dt) {
  if (a.rows() != a.cols()) throw ConfigError("A", "must be square");
  if (b.rows() != a.rows()) throw ConfigError("B", "row count must match A");
  Matrix residual = a - Matrix::Identity(a.rows(), a.cols());
  return SystemSpec("linear", LinearResidual{residual}, {b}, {spectral_norm(residual)}, horizon, dt);
}

ObstacleField::ObstacleField(std::vector<Obstacle> obstacles, Matrix projector)
    : obstacles_(std::move(obstacles)), projector_(std::move(projector)) {
  for (const Obstacle& o : obstacles_) {
    if (!(o.radius > 0.0)) throw ConfigError("radius", "obstacle radius must be positive");
    if (!(o.weight >= 0.0)) throw ConfigError("weight", "obstacle weight must be nonnegative");
    if (o.center.size() != projector_.rows()) {
      throw DimensionError("ObstacleField: center dimension does not match projector");
    }
  }
}

Matrix ObstacleField::coordinate_projector(Eigen::Index state_dim,
                                           const std::vector<Eigen::Index>& dims) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(dims.size()), state_dim);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 0 || dims[i] >= state_dim) throw ConfigError("position_dims", "index out of range");
    p(static_cast<Eigen::Index>(i), dims[i]) = 1.0;
  }
  return p;
}

double ObstacleField::max_value() const noexcept {
  double total = 0.0;
  for (const Obstacle& o : obstacles_) total += o.weight;
  return total;
}

Vector ObstacleField::potential(const Matrix& x) const {
  Vector out = Vector::Zero(x.rows());
  if (empty()) return out;
  const Matrix projected = x * projector_.transpose();
  for (const Obstacle& o : obstacles_) {
    const Matrix d = projected.rowwise() - o.center.transpose();
    out.array() += o.weight * (-d.rowwise().squaredNorm().array() / (o.radius * o.radius)).exp();
  }
  return out;
}

Var ObstacleField::potential(const Var& x) const {
  Tape& tape = x.tape();
  if (empty()) return tape.constant(Matrix::Zero(x.rows(), 1));
  Var projected = matmul_nt(x, tape.constant(projector_));
  std::optional<Var> total;
  for (const Obstacle& o : obstacles_) {
    Var d = add_bias(projected, tape.constant(Matrix(-o.center.transpose())));
    Var term = scale(exp(scale(row_squared_norm(d), -1.0 / (o.radius * o.radius))), o.weight);
    total = total ? add(*total, term) : term;
  }
  return *total;
}

}  // namespace dsteer

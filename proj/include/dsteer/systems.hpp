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

#ifndef DSTEER_SYSTEMS_HPP_
#define DSTEER_SYSTEMS_HPP_

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dsteer/jet.hpp"

namespace dsteer {

/// phi(x) = M x.
struct LinearResidual {
  Matrix matrix;
};

/// phi(x, y) = gain * (sqrt(1 + y^2), x).
struct SaturatingResidual {
  double gain = 0.1;
};

using Residual = std::variant<LinearResidual, SaturatingResidual>;

/**
 * @brief Control-affine dynamics in residual form x' = x + phi_k(x) + B_k u.
 *
 * Carries the Lipschitz constant of phi_k and the spectral norm of B_k used by
 * the invertibility budget. Input matrices and Lipschitz constants are given
 * either once (time invariant) or per step.
 */
class SystemSpec {
 public:
  SystemSpec(std::string name, Residual residual, std::vector<Matrix> inputs,
             std::vector<double> drift_lipschitz, int horizon, double dt);

  const std::string& name() const noexcept { return name_; }
  Eigen::Index state_dim() const noexcept { return n_; }
  Eigen::Index input_dim() const noexcept { return m_; }
  int horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  const Residual& residual() const noexcept { return residual_; }

  const Matrix& input_matrix(int k) const;
  double drift_lipschitz(int k) const;
  /// Largest singular value of B_k.
  double input_norm(int k) const;

  SystemSpec with_horizon(int horizon) const;

  /// phi_k applied to each row.
  Matrix residual(int k, const Matrix& x) const;
  Jet residual(int k, const Jet& x) const;
  /// Analytic Jacobian of phi_k at x.
  Matrix residual_jacobian(int k, const Vector& x) const;

  /// Uncontrolled transition x + phi_k(x).
  Matrix drift_step(int k, const Matrix& x) const;
  Var drift_step(int k, const Var& x) const;

  /// A for time-invariant linear systems (x' = A x + B u), otherwise empty.
  std::optional<Matrix> linear_dynamics() const;

 private:
  void check_step(int k) const;
  std::size_t slot(std::size_t size, int k) const { return size == 1 ? 0 : static_cast<std::size_t>(k); }

  std::string name_;
  Residual residual_;
  std::vector<Matrix> inputs_;
  std::vector<double> drift_lipschitz_;
  std::vector<double> input_norms_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  int horizon_ = 0;
  double dt_ = 0.0;
};

/// Planar double integrator: positions then velocities, A = [[I, dt I], [0, I]], B = [0; dt I].
SystemSpec double_integrator_2d(double dt, int horizon = 30);

/// x' = x + 0.1 sqrt(1 + y^2) + g u, y' = y + 0.1 x with input gain g (default 1).
SystemSpec saturating_drift_2d(int horizon = 40, double input_gain = 1.0);

/// x' = x + dt u in `dim` dimensions.
SystemSpec single_integrator(Eigen::Index dim, double dt, int horizon);

/// x' = A x + B u; requires ||A - I||_2 < 1.
SystemSpec linear_system(const Matrix& a, const Matrix& b, int horizon, double dt = 0.0);

/// Largest singular value.
double spectral_norm(const Matrix& m);

struct Obstacle {
  Vector center;
  double radius = 1.0;
  double weight = 0.0;
};

/// Sum of Gaussian-kernel potentials weight * exp(-||P x - c||^2 / r^2) over obstacles.
class ObstacleField {
 public:
  ObstacleField() = default;
  ObstacleField(std::vector<Obstacle> obstacles, Matrix projector);

  /// Selection matrix onto the listed state coordinates.
  static Matrix coordinate_projector(Eigen::Index state_dim, const std::vector<Eigen::Index>& dims);

  bool empty() const noexcept { return obstacles_.empty(); }
  const std::vector<Obstacle>& obstacles() const noexcept { return obstacles_; }
  const Matrix& projector() const noexcept { return projector_; }
  /// Sum of weights: the supremum of the potential.
  double max_value() const noexcept;

  Vector potential(const Matrix& x) const;
  Var potential(const Var& x) const;

 private:
  std::vector<Obstacle> obstacles_;
  Matrix projector_;
};

}  // namespace dsteer

#endif  // DSTEER_SYSTEMS_HPP_

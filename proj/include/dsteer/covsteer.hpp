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

#ifndef DSTEER_COVSTEER_HPP_
#define DSTEER_COVSTEER_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "dsteer/distributions.hpp"

namespace dsteer {

/// u_k = K_k (x_k - mu_k) + v_k.
struct AffinePolicy {
  std::vector<Matrix> gains;        // m x n each
  std::vector<Vector> feedforward;  // m each

  static AffinePolicy zeros(int horizon, Eigen::Index state_dim, Eigen::Index input_dim);
  int horizon() const noexcept { return static_cast<int>(gains.size()); }
};

struct MomentTrajectory {
  std::vector<Vector> means;        // N + 1
  std::vector<Matrix> covariances;  // N + 1
};

/// Linear-Gaussian steering instance x' = A x + B u with Gaussian boundaries.
struct LinearGaussianProblem {
  Matrix a;
  Matrix b;
  int horizon = 0;
  GaussianSpec initial;
  GaussianSpec target;
  double lambda = 1.0;

  void validate() const;
};

/// mu' = A mu + B v, Sigma' = (A + B K) Sigma (A + B K)^T, symmetrized after every step.
MomentTrajectory propagate(const Matrix& a, const Matrix& b, const AffinePolicy& policy,
                           const Vector& mean0, const Matrix& cov0);

struct AffineCost {
  double effort = 0.0;  // sum_k tr(K Sigma K^T) + ||v||^2
  double kl = 0.0;      // D_KL(N(mu_N, Sigma_N) || target)
  double total = 0.0;   // effort + lambda * kl
};

AffineCost analytic_cost(const MomentTrajectory& traj, const AffinePolicy& policy, double lambda,
                         const GaussianSpec& target);

/// Same cost recorded on a tape with gains and feedforwards as parameter leaves (K_0, v_0, K_1, ...).
struct TapedAffineCost {
  Var total;
  std::vector<Var> leaves;
};
TapedAffineCost analytic_cost(Tape& tape, const LinearGaussianProblem& problem, const AffinePolicy& policy);

struct AffineSolution {
  AffinePolicy policy;
  AffineCost cost;
  std::vector<double> restart_costs;
  /// Cost at every accepted iterate of the winning restart.
  std::vector<double> history;
};

/// L-BFGS over (K_k, v_k) from `restarts` starting points (the first is the zero policy); best wins.
AffineSolution optimize_affine(const LinearGaussianProblem& problem, int iterations = 2000,
                               int restarts = 5, std::uint64_t seed = 0);

/**
 * @brief Conic program in SDPA form: minimize c^T x s.t. sum_i F_i x_i - F_0 is PSD.
 *
 * Block sizes follow SDPA: a negative size is a diagonal (LP) block.
 */
struct SdpProblem {
  int num_vars = 0;
  std::vector<int> block_sizes;
  std::vector<double> objective;
  /// (matrix, block, row, col) -> value with 1-based indices, row <= col, matrix 0 = F_0.
  std::map<std::tuple<int, int, int, int>, double> entries;
  double objective_constant = 0.0;
  std::vector<std::string> var_names;

  void add(int matrix, int block, int row, int col, double value);
  /// Dense value of block `block` (1-based) of sum_i F_i x_i - F_0.
  Matrix block_value(int block, const Vector& x) const;
  double objective_value(const Vector& x) const;

  friend bool operator==(const SdpProblem&, const SdpProblem&) = default;
};

struct SdpLayout {
  int lmi_blocks = 0;
  int effort_blocks = 0;
  int lp_rows = 0;
  int log_cuts = 0;
};

/**
 * Relaxed soft-constrained covariance steering program with U_k = Sigma_k K_k^T, Y_k >= U_k^T Sigma_k^-1 U_k,
 * epigraph slacks for ||v_k||^2 and the terminal mean term, and log det Sigma_N bounded below through
 * a triangular-factor LMI plus `log_cuts` tangent cuts of log per diagonal entry.
 */
SdpProblem export_sdp(const LinearGaussianProblem& problem, int log_cuts = 24, SdpLayout* layout = nullptr);

/// Feasible point of export_sdp() built from an affine policy; its objective equals the analytic cost.
Vector sdp_point(const LinearGaussianProblem& problem, const AffinePolicy& policy);

std::string to_sdpa(const SdpProblem& problem);
SdpProblem parse_sdpa(const std::string& text);

/// CSV with columns instance,cost,effort,kl.
void write_benchmark_csv(const std::string& path, const std::string& instance, const AffineCost& cost);

}  // namespace dsteer

#endif  // DSTEER_COVSTEER_HPP_

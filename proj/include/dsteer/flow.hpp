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

#ifndef DSTEER_FLOW_HPP_
#define DSTEER_FLOW_HPP_

#include <string>
#include <vector>

#include "dsteer/distributions.hpp"
#include "dsteer/policy.hpp"
#include "dsteer/systems.hpp"

namespace dsteer {

/// Per-step contraction rate L_phi + sigma_B * alpha * L_pi of the closed-loop residual.
double contraction_rate(const SystemSpec& sys, const LipschitzBudget& budget, int k);

/// Throws ConfigError naming the first step whose contraction rate is not below 1.
void check_budget(const SystemSpec& sys, const LipschitzBudget& budget);

/// n log(1 - L_g): every step's log-det exceeds this when the budget holds.
double logdet_lower_bound(const SystemSpec& sys, const LipschitzBudget& budget, int k);

/// One closed-loop transition recorded on a tape.
struct FlowStep {
  Var next;     // B x n
  Var control;  // B x m
  Var logdet;   // B x 1
};

/// x' = x + phi_k(x) + B_k u with u = pi_k(x), plus log det of the exact per-sample Jacobian.
FlowStep step(const SystemSpec& sys, const BoundPolicy& policy, int k, const Var& x);

struct TapeRollout {
  std::vector<Var> states;    // N + 1 entries
  std::vector<Var> controls;  // N entries
  std::vector<Var> logdets;   // N entries
  Var total_logdet;           // B x 1
};

TapeRollout rollout(const SystemSpec& sys, const BoundPolicy& policy, const Var& x0);

/// -(1/scale_rows) * sum_b [log p_f(x_N) + L]; scale_rows defaults to the batch size.
Var nll_term(const TapeRollout& rollout, const Distribution& target, double scale_rows = 0.0);

/// Single trajectory view.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> controls;
  std::vector<double> logdets;
  double total_logdet = 0.0;
};

/// Plain values of a rollout of B samples.
class RolloutBatch {
 public:
  RolloutBatch(std::vector<Matrix> states, std::vector<Matrix> controls, Matrix logdets);

  Eigen::Index batch() const noexcept { return states_.front().rows(); }
  int horizon() const noexcept { return static_cast<int>(controls_.size()); }
  const Matrix& states(int k) const { return states_.at(static_cast<std::size_t>(k)); }
  const Matrix& controls(int k) const { return controls_.at(static_cast<std::size_t>(k)); }
  const Matrix& terminal() const noexcept { return states_.back(); }
  /// B x N per-step log-dets.
  const Matrix& logdets() const noexcept { return logdets_; }
  Vector total_logdet() const { return logdets_.rowwise().sum(); }
  Trajectory trajectory(Eigen::Index b) const;

  /// Per-sample sum of squared control norms.
  Vector effort() const;
  /// Per-sample sum of V(x_k) over k = 0..N-1.
  Vector potential(const ObstacleField& field) const;

  double mean_effort() const { return effort().mean(); }
  double mean_potential(const ObstacleField& field) const { return potential(field).mean(); }
  double mean_nll(const Distribution& target) const;

 private:
  std::vector<Matrix> states_;
  std::vector<Matrix> controls_;
  Matrix logdets_;
};

struct StepValues {
  Matrix next;
  Matrix control;
  Vector logdet;
};

/// Untaped closed-loop transition of every row of x.
StepValues step(const SystemSpec& sys, const PolicyStack& stack, int k, const Matrix& x);

/// Untaped rollout, processed `chunk` rows at a time.
RolloutBatch simulate(const SystemSpec& sys, const PolicyStack& stack, const Matrix& x0,
                      Eigen::Index chunk = 512);

struct Inversion {
  Matrix x;
  int iterations = 0;
  double residual = 0.0;  // max over rows of ||Phi_k(x) - y||
};

/// Solves Phi_k(x) = y row by row with the fixed point x <- y - g_k(x).
Inversion invert_step(const SystemSpec& sys, const PolicyStack& stack, int k, const Matrix& y,
                      double tol = 1e-10, int max_iter = 200);

/// Inverts steps N-1 down to 0.
Matrix invert_flow(const SystemSpec& sys, const PolicyStack& stack, const Matrix& xn,
                   double tol = 1e-10, int max_iter = 200);

/// CSV with columns sample_id, k, x_1..x_n, u_1..u_m, logdet_k for the first `max_samples` rows.
void write_trajectories(const std::string& path, const RolloutBatch& batch,
                        Eigen::Index max_samples = -1);

}  // namespace dsteer

#endif  // DSTEER_FLOW_HPP_

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

#ifndef DSTEER_TRAINER_HPP_
#define DSTEER_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsteer/flow.hpp"

namespace dsteer {

/// Everything that defines a steering instance apart from the policy.
struct SteeringProblem {
  SystemSpec system;
  Distribution source;
  Distribution target;
  ObstacleField obstacles;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct TrainConfig {
  double lambda = 1.0;
  Eigen::Index batch = 256;
  int steps = 5000;
  std::uint64_t seed = 0;
  int eval_every = 100;
  Eigen::Index eval_samples = 1000;
  /// Rows per tape. Gradients are reduced over chunks in order, so results do not depend on `threads`.
  Eigen::Index chunk = 128;
  int threads = 1;
  AdamConfig adam;

  /// Throws ConfigError on the first invalid field.
  void validate() const;
};

struct LossBreakdown {
  double effort = 0.0;
  double potential = 0.0;
  double nll = 0.0;
  double total = 0.0;
};

struct LossNodes {
  Var total;
  Var effort;
  Var potential;
  Var nll;
};

/// total = (1/B) sum_b [sum_k ||u_k||^2 + sum_k V(x_k)] + lambda * nll. B defaults to the batch rows.
LossNodes total_loss(const TapeRollout& rollout, const ObstacleField& field, const Distribution& target,
                     double lambda, double scale_rows = 0.0);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + weight_decay theta).
void adamw_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
                const AdamConfig& cfg);

struct ConvergenceRecord {
  int step = 0;
  LossBreakdown loss;
  /// nll + E[log p_i] when the source has a density, else nll (flagged by kl_shifted).
  double kl_estimate = 0.0;
  bool kl_shifted = false;
  double seconds = 0.0;

  /// effort + potential + lambda * kl_estimate: the steering objective including the constant.
  double cost(double lambda) const { return loss.effort + loss.potential + lambda * kl_estimate; }
};

struct ConvergenceLog {
  std::vector<ConvergenceRecord> records;

  void write_csv(const std::string& path) const;
};

/// Untaped loss of `stack` on fixed initial states.
ConvergenceRecord evaluate(const SteeringProblem& problem, const PolicyStack& stack, const Matrix& x0,
                           double lambda);

/// Loss value and parameter gradients for one batch, in PolicyStack::parameters() order.
struct BatchGradient {
  LossBreakdown loss;
  std::vector<Matrix> grads;
};

BatchGradient batch_gradient(const SteeringProblem& problem, const PolicyStack& stack, const Matrix& x0,
                             const TrainConfig& cfg);

struct TrainResult {
  PolicyStack policy;
  ConvergenceLog log;
};

using ProgressFn = std::function<void(const ConvergenceRecord&)>;

/// AdamW on mini-batches from the source; evaluates on a held-out set every eval_every steps.
/// Throws DivergenceError on a non-finite loss term.
TrainResult train(const SteeringProblem& problem, PolicyStack initial, const TrainConfig& cfg,
                  const ProgressFn& progress = {});

/// Held-out evaluation states used by train().
Matrix evaluation_states(const SteeringProblem& problem, const TrainConfig& cfg);

}  // namespace dsteer

#endif  // DSTEER_TRAINER_HPP_

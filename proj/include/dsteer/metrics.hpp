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

#ifndef DSTEER_METRICS_HPP_
#define DSTEER_METRICS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dsteer/flow.hpp"
#include "dsteer/trainer.hpp"

namespace dsteer {

/// Optimal one-to-one coupling: sample i of X is sent to sample assignment[i] of Y.
struct CouplingPlan {
  std::vector<Eigen::Index> assignment;
  /// Mean squared transport distance, (1/M) sum ||x_i - y_{assignment[i]}||^2.
  double cost = 0.0;
};

struct W2Result {
  double distance = 0.0;
  CouplingPlan plan;
};

inline constexpr Eigen::Index kMaxAssignmentSize = 2000;

/// Exact discrete 2-Wasserstein distance between equal-size uniform point sets (Hungarian method).
W2Result w2_exact(const Matrix& x, const Matrix& y);

/// Closed-form W2 between two Gaussians.
double gaussian_w2(const GaussianSpec& a, const GaussianSpec& b);

enum class LogdetReduction {
  kTotal,    // min over samples of |sum_k l_k|
  kPerStep,  // min over samples and steps of |l_k|
};

double min_abs_logdet(const RolloutBatch& batch, LogdetReduction reduction = LogdetReduction::kTotal);

struct MetricsReport {
  std::string experiment;
  double w2 = 0.0;
  double min_abs_logdet = 0.0;
  double train_minutes = 0.0;
  Eigen::Index eval_samples = 0;
  std::uint64_t seed = 0;
};

struct ReportOptions {
  Eigen::Index eval_samples = 1000;
  std::uint64_t seed = 0;
  LogdetReduction reduction = LogdetReduction::kTotal;
  Eigen::Index chunk = 512;
};

/// Held-out initial states for a report (stream "report-source").
Matrix report_states(const Distribution& source, const ReportOptions& options);

/// Scores an evaluation rollout against fresh target samples (stream "report-target").
MetricsReport score(const std::string& experiment, const RolloutBatch& batch, const Distribution& target,
                    double train_seconds, const ReportOptions& options);

/// Fresh held-out rollout (streams "report-source" / "report-target") scored against target samples.
MetricsReport report(const std::string& experiment, const SteeringProblem& problem, const PolicyStack& stack,
                     double train_seconds, const ReportOptions& options = {});

/// Columns experiment,w2,min_abs_logdet,train_minutes,eval_samples,seed.
void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& rows);

}  // namespace dsteer

#endif  // DSTEER_METRICS_HPP_

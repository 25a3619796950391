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

#include "dsteer/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dsteer/errors.hpp"
#include "dsteer/rng.hpp"

namespace dsteer {

namespace {

// Shortest augmenting path with potentials, O(M^3). Returns column of each row.
std::vector<Eigen::Index> hungarian(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = match[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Eigen::Index> row_to_col(n);
  for (Eigen::Index j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

Matrix sqrtm_spd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

W2Result w2_exact(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw ContractError(fmt::format("w2_exact: sample counts differ ({} vs {})", x.rows(), y.rows()));
  }
  if (x.cols() != y.cols()) throw DimensionError("w2_exact: dimensions differ");
  if (x.rows() == 0) throw ContractError("w2_exact: empty sample sets");
  if (x.rows() > kMaxAssignmentSize) {
    throw ContractError(fmt::format("w2_exact: at most {} samples supported", kMaxAssignmentSize));
  }
  const Eigen::Index m = x.rows();
  // ||x||^2 + ||y||^2 - 2 x.y, clamped against cancellation.
  Matrix cost = (-2.0 * x * y.transpose()).colwise() + x.rowwise().squaredNorm();
  cost.rowwise() += y.rowwise().squaredNorm().transpose();
  cost = cost.cwiseMax(0.0);
  W2Result r;
  r.plan.assignment = hungarian(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) total += (x.row(i) - y.row(r.plan.assignment[i])).squaredNorm();
  r.plan.cost = total / static_cast<double>(m);
  r.distance = std::sqrt(r.plan.cost);
  return r;
}

double gaussian_w2(const GaussianSpec& a, const GaussianSpec& b) {
  if (a.dim() != b.dim()) throw DimensionError("gaussian_w2: dimension mismatch");
  const Matrix rb = sqrtm_spd(b.covariance());
  const Matrix cross = sqrtm_spd(rb * a.covariance() * rb);
  const double w2sq = (a.mean() - b.mean()).squaredNorm() +
                      (a.covariance() + b.covariance() - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, w2sq));
}

double min_abs_logdet(const RolloutBatch& batch, LogdetReduction reduction) {
  if (batch.horizon() == 0) return 0.0;
  if (reduction == LogdetReduction::kPerStep) return batch.logdets().cwiseAbs().minCoeff();
  return batch.total_logdet().cwiseAbs().minCoeff();
}

Matrix report_states(const Distribution& source, const ReportOptions& options) {
  CounterRng rng(options.seed, "report-source");
  return source.sample(options.eval_samples, rng);
}

MetricsReport score(const std::string& experiment, const RolloutBatch& batch, const Distribution& target,
                    double train_seconds, const ReportOptions& options) {
  CounterRng rng(options.seed, "report-target");
  const Matrix y = target.sample(batch.batch(), rng);
  MetricsReport r;
  r.experiment = experiment;
  r.w2 = w2_exact(batch.terminal(), y).distance;
  r.min_abs_logdet = min_abs_logdet(batch, options.reduction);
  r.train_minutes = train_seconds / 60.0;
  r.eval_samples = batch.batch();
  r.seed = options.seed;
  return r;
}

MetricsReport report(const std::string& experiment, const SteeringProblem& problem, const PolicyStack& stack,
                     double train_seconds, const ReportOptions& options) {
  const RolloutBatch batch = simulate(problem.system, stack, report_states(problem.source, options), options.chunk);
  return score(experiment, batch, problem.target, train_seconds, options);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& rows) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_metrics_csv: cannot open " + path);
  out << "experiment,w2,min_abs_logdet,train_minutes,eval_samples,seed\n";
  for (const MetricsReport& r : rows) {
    out << fmt::format("{},{:.17g},{:.17g},{:.3f},{},{}\n", r.experiment, r.w2, r.min_abs_logdet, r.train_minutes,
                       r.eval_samples, r.seed);
  }
}

}  // namespace dsteer

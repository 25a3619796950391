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

#include "dsteer/flow.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include "dsteer/errors.hpp"

namespace dsteer {

double contraction_rate(const SystemSpec& sys, const LipschitzBudget& budget, int k) {
  return sys.drift_lipschitz(k) + sys.input_norm(k) * budget.output_scale(k);
}

void check_budget(const SystemSpec& sys, const LipschitzBudget& budget) {
  for (int k = 0; k < sys.horizon(); ++k) {
    const double rate = contraction_rate(sys, budget, k);
    if (!(rate < 1.0)) {
      throw ConfigError("lipschitz", fmt::format("step {}: alpha*L_pi*sigma_B + L_phi = {:.6g} "
                                                 "must be below 1 for invertibility",
                                                 k, rate));
    }
  }
}

double logdet_lower_bound(const SystemSpec& sys, const LipschitzBudget& budget, int k) {
  return static_cast<double>(sys.state_dim()) * std::log(1.0 - contraction_rate(sys, budget, k));
}

FlowStep step(const SystemSpec& sys, const BoundPolicy& policy, int k, const Var& x) {
  Tape& tape = x.tape();
  Jet xj = Jet::seeded(x);
  Jet u = policy.act(k, xj);
  if (u.value().cols() != sys.input_dim()) {
    throw DimensionError("step: policy output width differs from the input dimension");
  }
  Jet next = xj + sys.residual(k, xj) + linear(u, tape.constant(sys.input_matrix(k)));
  try {
    return {next.value(), u.value(), batched_logdet(next.tangent(), sys.state_dim())};
  } catch (const SingularityError& e) {
    throw SingularityError(e.what(), k);
  }
}

TapeRollout rollout(const SystemSpec& sys, const BoundPolicy& policy, const Var& x0) {
  if (x0.cols() != sys.state_dim()) throw DimensionError("rollout: state dimension mismatch");
  TapeRollout out;
  out.states.push_back(x0);
  for (int k = 0; k < sys.horizon(); ++k) {
    FlowStep s = step(sys, policy, k, out.states.back());
    out.states.push_back(s.next);
    out.controls.push_back(s.control);
    out.logdets.push_back(s.logdet);
    out.total_logdet = k == 0 ? s.logdet : add(out.total_logdet, s.logdet);
  }
  if (sys.horizon() == 0) out.total_logdet = x0.tape().constant(Matrix::Zero(x0.rows(), 1));
  return out;
}

Var nll_term(const TapeRollout& rollout, const Distribution& target, double scale_rows) {
  if (!target.has_pdf()) throw ContractError("nll_term: target has no explicit density");
  const Var& xn = rollout.states.back();
  if (scale_rows <= 0.0) scale_rows = static_cast<double>(xn.rows());
  return scale(sum(add(target.log_pdf(xn), rollout.total_logdet)), -1.0 / scale_rows);
}

RolloutBatch::RolloutBatch(std::vector<Matrix> states, std::vector<Matrix> controls, Matrix logdets)
    : states_(std::move(states)), controls_(std::move(controls)), logdets_(std::move(logdets)) {
  if (states_.size() != controls_.size() + 1) {
    throw DimensionError("RolloutBatch: need N + 1 states for N controls");
  }
  const Eigen::Index b = states_.front().rows();
  for (const Matrix& s : states_) {
    if (s.rows() != b) throw DimensionError("RolloutBatch: ragged states");
  }
  for (const Matrix& c : controls_) {
    if (c.rows() != b) throw DimensionError("RolloutBatch: ragged controls");
  }
  require_shape(logdets_, b, static_cast<Eigen::Index>(controls_.size()), "RolloutBatch logdets");
}

Trajectory RolloutBatch::trajectory(Eigen::Index b) const {
  if (b < 0 || b >= batch()) throw IndexError("trajectory: sample index out of range");
  Trajectory t;
  for (const Matrix& s : states_) t.states.push_back(s.row(b).transpose());
  for (const Matrix& c : controls_) t.controls.push_back(c.row(b).transpose());
  for (Eigen::Index k = 0; k < logdets_.cols(); ++k) t.logdets.push_back(logdets_(b, k));
  t.total_logdet = logdets_.row(b).sum();
  return t;
}

Vector RolloutBatch::effort() const {
  Vector e = Vector::Zero(batch());
  for (const Matrix& c : controls_) e += c.rowwise().squaredNorm();
  return e;
}

Vector RolloutBatch::potential(const ObstacleField& field) const {
  Vector p = Vector::Zero(batch());
  for (std::size_t k = 0; k < controls_.size(); ++k) p += field.potential(states_[k]);
  return p;
}

double RolloutBatch::mean_nll(const Distribution& target) const {
  return -(target.log_pdf(terminal()) + total_logdet()).mean();
}

StepValues step(const SystemSpec& sys, const PolicyStack& stack, int k, const Matrix& x) {
  Tape tape;
  BoundPolicy bound = stack.bind(tape, false, k, k + 1);
  FlowStep s = step(sys, bound, k, tape.constant(x));
  return {s.next.value(), s.control.value(), s.logdet.value().col(0)};
}

RolloutBatch simulate(const SystemSpec& sys, const PolicyStack& stack, const Matrix& x0,
                      Eigen::Index chunk) {
  if (x0.cols() != sys.state_dim()) throw DimensionError("simulate: state dimension mismatch");
  if (stack.horizon() != sys.horizon()) throw DimensionError("simulate: policy horizon mismatch");
  if (chunk < 1) chunk = x0.rows();
  const int n_steps = sys.horizon();
  const Eigen::Index b = x0.rows();
  std::vector<Matrix> states(static_cast<std::size_t>(n_steps) + 1, Matrix(b, sys.state_dim()));
  std::vector<Matrix> controls(static_cast<std::size_t>(n_steps), Matrix(b, sys.input_dim()));
  Matrix logdets(b, n_steps);
  states[0] = x0;
  for (int k = 0; k < n_steps; ++k) {
    for (Eigen::Index start = 0; start < b; start += chunk) {
      const Eigen::Index rows = std::min(chunk, b - start);
      StepValues s = step(sys, stack, k, states[static_cast<std::size_t>(k)].middleRows(start, rows));
      states[static_cast<std::size_t>(k) + 1].middleRows(start, rows) = s.next;
      controls[static_cast<std::size_t>(k)].middleRows(start, rows) = s.control;
      logdets.col(k).segment(start, rows) = s.logdet;
    }
  }
  return RolloutBatch(std::move(states), std::move(controls), std::move(logdets));
}

Inversion invert_step(const SystemSpec& sys, const PolicyStack& stack, int k, const Matrix& y,
                      double tol, int max_iter) {
  if (!(tol > 0.0)) throw ContractError("invert_step: tol must be positive");
  if (y.cols() != sys.state_dim()) throw DimensionError("invert_step: state dimension mismatch");
  const Matrix bt = sys.input_matrix(k).transpose();
  auto g = [&](const Matrix& x) -> Matrix { return sys.residual(k, x) + stack.act(k, x) * bt; };
  Inversion out;
  out.x = y;
  for (;;) {
    Matrix update = y - g(out.x);
    // ||Phi(x) - y|| = ||x + g(x) - y|| = ||x - update||
    out.residual = (out.x - update).rowwise().norm().maxCoeff();
    if (out.residual <= tol) return out;
    if (out.iterations >= max_iter) {
      throw ConvergenceError(fmt::format("invert_step: step {} not converged after {} iterations", k,
                                         max_iter),
                             out.residual);
    }
    out.x = std::move(update);
    ++out.iterations;
  }
}

Matrix invert_flow(const SystemSpec& sys, const PolicyStack& stack, const Matrix& xn, double tol,
                   int max_iter) {
  Matrix x = xn;
  for (int k = sys.horizon() - 1; k >= 0; --k) x = invert_step(sys, stack, k, x, tol, max_iter).x;
  return x;
}

void write_trajectories(const std::string& path, const RolloutBatch& batch, Eigen::Index max_samples) {
  std::ofstream out(path);
  if (!out) throw ContractError("cannot write trajectories to '" + path + "'");
  const Eigen::Index n = batch.terminal().cols();
  const Eigen::Index m = batch.horizon() > 0 ? batch.controls(0).cols() : 0;
  out << "sample_id,k";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
  out << ",logdet_k\n";
  const Eigen::Index count = max_samples < 0 ? batch.batch() : std::min(max_samples, batch.batch());
  fmt::memory_buffer buf;
  for (Eigen::Index b = 0; b < count; ++b) {
    for (int k = 0; k <= batch.horizon(); ++k) {
      buf.clear();
      fmt::format_to(std::back_inserter(buf), "{},{}", b, k);
      const Matrix& s = batch.states(k);
      for (Eigen::Index i = 0; i < n; ++i) fmt::format_to(std::back_inserter(buf), ",{:.17g}", s(b, i));
      if (k < batch.horizon()) {
        const Matrix& c = batch.controls(k);
        for (Eigen::Index i = 0; i < m; ++i) {
          fmt::format_to(std::back_inserter(buf), ",{:.17g}", c(b, i));
        }
        fmt::format_to(std::back_inserter(buf), ",{:.17g}\n", batch.logdets()(b, k));
      } else {
        for (Eigen::Index i = 0; i < m; ++i) buf.push_back(',');
        buf.append(std::string_view(",\n"));
      }
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
}

}  // namespace dsteer

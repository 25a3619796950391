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

#include "dsteer/trainer.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "dsteer/errors.hpp"

namespace dsteer {

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda", "must be positive");
  if (batch < 1) throw ConfigError("batch", "must be at least 1");
  if (steps < 0) throw ConfigError("steps", "must be nonnegative");
  if (eval_every < 1) throw ConfigError("eval_every", "must be at least 1");
  if (eval_samples < 1) throw ConfigError("eval_samples", "must be at least 1");
  if (chunk < 1) throw ConfigError("chunk", "must be at least 1");
  if (threads < 1) throw ConfigError("threads", "must be at least 1");
  if (!(adam.lr > 0.0)) throw ConfigError("lr", "must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("eps", "must be positive");
  if (!(adam.weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be nonnegative");
}

LossNodes total_loss(const TapeRollout& rollout, const ObstacleField& field, const Distribution& target,
                     double lambda, double scale_rows) {
  const Var& x0 = rollout.states.front();
  Tape& tape = x0.tape();
  if (scale_rows <= 0.0) scale_rows = static_cast<double>(x0.rows());
  const double inv = 1.0 / scale_rows;

  Var effort = tape.constant(0.0);
  for (const Var& u : rollout.controls) effort = add(effort, squared_norm(u));
  effort = scale(effort, inv);

  Var potential = tape.constant(0.0);
  if (!field.empty()) {
    for (std::size_t k = 0; k < rollout.controls.size(); ++k) {
      potential = add(potential, sum(field.potential(rollout.states[k])));
    }
    potential = scale(potential, inv);
  }
  Var nll = nll_term(rollout, target, scale_rows);
  Var total = add(add(effort, potential), scale(nll, lambda));
  return {total, effort, potential, nll};
}

void adamw_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
                const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw DimensionError("adamw_step: gradient count mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adamw_step: optimizer state mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i];
    if (grads[i].rows() != theta.rows() || grads[i].cols() != theta.cols() ||
        state.m[i].rows() != theta.rows() || state.m[i].cols() != theta.cols()) {
      throw DimensionError("adamw_step: shape mismatch for parameter " + std::to_string(i));
    }
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i].cwiseAbs2();
    const auto m_hat = state.m[i].array() / c1;
    const auto v_hat = state.v[i].array() / c2;
    theta.array() -= cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * theta.array());
  }
}

void ConvergenceLog::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ContractError("cannot write convergence log to '" + path + "'");
  out << "step,effort,potential,nll,total,kl_estimate,seconds\n";
  for (const ConvergenceRecord& r : records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.3f}\n", r.step, r.loss.effort,
                       r.loss.potential, r.loss.nll, r.loss.total, r.kl_estimate, r.seconds);
  }
}

ConvergenceRecord evaluate(const SteeringProblem& problem, const PolicyStack& stack, const Matrix& x0,
                           double lambda) {
  RolloutBatch batch = simulate(problem.system, stack, x0);
  ConvergenceRecord r;
  r.loss.effort = batch.mean_effort();
  r.loss.potential = batch.mean_potential(problem.obstacles);
  r.loss.nll = batch.mean_nll(problem.target);
  r.loss.total = r.loss.effort + r.loss.potential + lambda * r.loss.nll;
  r.kl_shifted = !problem.source.has_pdf();
  r.kl_estimate = r.loss.nll + (r.kl_shifted ? 0.0 : problem.source.log_pdf(x0).mean());
  return r;
}

BatchGradient batch_gradient(const SteeringProblem& problem, const PolicyStack& stack, const Matrix& x0,
                             const TrainConfig& cfg) {
  const Eigen::Index rows = x0.rows();
  const Eigen::Index chunk = std::max<Eigen::Index>(1, cfg.chunk);
  const std::size_t n_chunks = static_cast<std::size_t>((rows + chunk - 1) / chunk);
  const double scale_rows = static_cast<double>(rows);

  struct ChunkResult {
    LossBreakdown loss;
    std::vector<Matrix> grads;
    std::exception_ptr error;
  };
  std::vector<ChunkResult> results(n_chunks);

  auto work = [&](std::size_t c) {
    try {
      const Eigen::Index start = static_cast<Eigen::Index>(c) * chunk;
      const Eigen::Index count = std::min(chunk, rows - start);
      Tape tape;
      BoundPolicy bound = stack.bind(tape);
      TapeRollout r = rollout(problem.system, bound, tape.constant(x0.middleRows(start, count)));
      LossNodes loss = total_loss(r, problem.obstacles, problem.target, cfg.lambda, scale_rows);
      ChunkResult& out = results[c];
      out.loss = {loss.effort.scalar(), loss.potential.scalar(), loss.nll.scalar(), loss.total.scalar()};
      Gradient g = tape.backward(loss.total);
      out.grads.reserve(bound.leaves().size());
      for (const Var& leaf : bound.leaves()) out.grads.push_back(g[leaf]);
    } catch (...) {
      results[c].error = std::current_exception();
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n_chunks);
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < n_chunks; c += n_threads) work(c);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  BatchGradient out;
  for (ChunkResult& r : results) {
    if (r.error) std::rethrow_exception(r.error);
    out.loss.effort += r.loss.effort;
    out.loss.potential += r.loss.potential;
    out.loss.nll += r.loss.nll;
    out.loss.total += r.loss.total;
    if (out.grads.empty()) {
      out.grads = std::move(r.grads);
    } else {
      for (std::size_t i = 0; i < out.grads.size(); ++i) out.grads[i] += r.grads[i];
    }
  }
  return out;
}

namespace {

void check_finite(const LossBreakdown& loss, int step) {
  if (!std::isfinite(loss.effort)) throw DivergenceError(step, "effort");
  if (!std::isfinite(loss.potential)) throw DivergenceError(step, "potential");
  if (!std::isfinite(loss.nll)) throw DivergenceError(step, "nll");
  if (!std::isfinite(loss.total)) throw DivergenceError(step, "total");
}

}  // namespace

Matrix evaluation_states(const SteeringProblem& problem, const TrainConfig& cfg) {
  CounterRng rng(cfg.seed, "eval");
  return problem.source.sample(cfg.eval_samples, rng);
}

TrainResult train(const SteeringProblem& problem, PolicyStack initial, const TrainConfig& cfg,
                  const ProgressFn& progress) {
  cfg.validate();
  if (!problem.target.has_pdf()) throw ContractError("train: target needs an explicit density");
  if (initial.horizon() != problem.system.horizon()) {
    throw DimensionError("train: policy horizon differs from system horizon");
  }
  check_budget(problem.system, initial.budget());

  TrainResult result{std::move(initial), {}};
  PolicyStack& stack = result.policy;
  const Matrix eval_x0 = evaluation_states(problem, cfg);
  CounterRng batch_rng(cfg.seed, "batch");
  const auto start = std::chrono::steady_clock::now();

  auto record = [&](int step) {
    ConvergenceRecord r = evaluate(problem, stack, eval_x0, cfg.lambda);
    check_finite(r.loss, step);
    r.step = step;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.records.push_back(r);
    if (progress) progress(r);
  };

  const std::vector<Matrix*> params = stack.parameters();
  AdamState state;
  for (int s = 0; s < cfg.steps; ++s) {
    if (s % cfg.eval_every == 0) record(s);
    const Matrix x0 = problem.source.sample(cfg.batch, batch_rng);
    BatchGradient bg = batch_gradient(problem, stack, x0, cfg);
    check_finite(bg.loss, s);
    adamw_step(params, bg.grads, state, cfg.adam);
    stack.power_iterate(1);
  }
  if (cfg.steps > 0) stack.converge_spectral();
  if (result.log.records.empty() || result.log.records.back().step != cfg.steps) record(cfg.steps);
  return result;
}

}  // namespace dsteer

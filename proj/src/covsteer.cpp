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

#include "dsteer/covsteer.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>
#include <ceres/iteration_callback.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "dsteer/errors.hpp"
#include "dsteer/rng.hpp"

namespace dsteer {

AffinePolicy AffinePolicy::zeros(int horizon, Eigen::Index state_dim, Eigen::Index input_dim) {
  if (horizon < 0) throw ContractError("AffinePolicy: negative horizon");
  AffinePolicy p;
  p.gains.assign(horizon, Matrix::Zero(input_dim, state_dim));
  p.feedforward.assign(horizon, Vector::Zero(input_dim));
  return p;
}

void LinearGaussianProblem::validate() const {
  if (a.rows() != a.cols()) throw DimensionError("LinearGaussianProblem: A must be square");
  if (b.rows() != a.rows()) throw DimensionError("LinearGaussianProblem: B rows must match A");
  if (initial.dim() != a.rows() || target.dim() != a.rows()) {
    throw DimensionError("LinearGaussianProblem: boundary dimension must match A");
  }
  if (horizon < 1) throw ConfigError("horizon", "must be positive");
  if (!(lambda > 0.0)) throw ConfigError("lambda", "must be positive");
}

namespace {

void check_policy(const Matrix& a, const Matrix& b, const AffinePolicy& policy) {
  if (policy.feedforward.size() != policy.gains.size()) {
    throw DimensionError("AffinePolicy: gains and feedforward lengths differ");
  }
  for (int k = 0; k < policy.horizon(); ++k) {
    require_shape(policy.gains[k], b.cols(), a.rows(), "AffinePolicy gain");
    if (policy.feedforward[k].size() != b.cols()) throw DimensionError("AffinePolicy: feedforward size");
  }
}

}  // namespace

MomentTrajectory propagate(const Matrix& a, const Matrix& b, const AffinePolicy& policy,
                           const Vector& mean0, const Matrix& cov0) {
  check_policy(a, b, policy);
  if (mean0.size() != a.rows()) throw DimensionError("propagate: initial mean dimension");
  require_shape(cov0, a.rows(), a.rows(), "propagate initial covariance");
  MomentTrajectory t;
  t.means.push_back(mean0);
  t.covariances.push_back(cov0);
  for (int k = 0; k < policy.horizon(); ++k) {
    const Matrix closed = a + b * policy.gains[k];
    t.means.push_back(a * t.means.back() + b * policy.feedforward[k]);
    const Matrix s = closed * t.covariances.back() * closed.transpose();
    t.covariances.push_back(0.5 * (s + s.transpose()));
  }
  return t;
}

AffineCost analytic_cost(const MomentTrajectory& traj, const AffinePolicy& policy, double lambda,
                         const GaussianSpec& target) {
  if (traj.covariances.size() != static_cast<std::size_t>(policy.horizon()) + 1) {
    throw DimensionError("analytic_cost: trajectory and policy horizons differ");
  }
  AffineCost c;
  for (int k = 0; k < policy.horizon(); ++k) {
    const Matrix& kk = policy.gains[k];
    c.effort += (kk * traj.covariances[k] * kk.transpose()).trace() + policy.feedforward[k].squaredNorm();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(traj.covariances.back());
  if (llt.info() != Eigen::Success) {
    c.kl = std::numeric_limits<double>::infinity();
  } else {
    c.kl = gaussian_kl(GaussianSpec(traj.means.back(), traj.covariances.back()), target);
  }
  c.total = c.effort + lambda * c.kl;
  return c;
}

TapedAffineCost analytic_cost(Tape& tape, const LinearGaussianProblem& problem, const AffinePolicy& policy) {
  check_policy(problem.a, problem.b, policy);
  const Eigen::Index n = problem.a.rows();
  const Var a = tape.constant(problem.a);
  const Var b = tape.constant(problem.b);
  Var mean = tape.constant(Matrix(problem.initial.mean()));
  Var cov = tape.constant(problem.initial.covariance());
  TapedAffineCost out;
  std::optional<Var> effort;
  for (int k = 0; k < policy.horizon(); ++k) {
    const Var kk = tape.parameter(policy.gains[k]);
    const Var v = tape.parameter(Matrix(policy.feedforward[k]));
    out.leaves.push_back(kk);
    out.leaves.push_back(v);
    const Var term = add(sum(mul(matmul(kk, cov), kk)), squared_norm(v));
    effort = effort ? add(*effort, term) : term;
    const Var closed = add(a, matmul(b, kk));
    mean = add(matmul(a, mean), matmul(b, v));
    const Var s = matmul_nt(matmul(closed, cov), closed);
    cov = scale(add(s, transpose(s)), 0.5);
  }
  const Matrix target_inv = problem.target.covariance().inverse();
  const Var p = tape.constant(target_inv);
  const Var d = sub(mean, tape.constant(Matrix(problem.target.mean())));
  const double offset = problem.target.log_det_covariance() - static_cast<double>(n);
  const Var kl = scale(add_scalar(sub(add(sum(mul(p, cov)), sum(mul(d, matmul(p, d)))), logdet(cov)), offset),
                       0.5);
  const Var weighted = scale(kl, problem.lambda);
  out.total = effort ? add(*effort, weighted) : weighted;
  return out;
}

namespace {

Eigen::Index parameter_count(const LinearGaussianProblem& p) {
  return p.horizon * p.b.cols() * (p.a.rows() + 1);
}

AffinePolicy unpack(const LinearGaussianProblem& p, const double* x) {
  AffinePolicy policy = AffinePolicy::zeros(p.horizon, p.a.rows(), p.b.cols());
  for (int k = 0; k < p.horizon; ++k) {
    Matrix& g = policy.gains[k];
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = *x++;
    }
    for (Eigen::Index i = 0; i < g.rows(); ++i) policy.feedforward[k](i) = *x++;
  }
  return policy;
}

std::vector<double> pack(const AffinePolicy& policy) {
  std::vector<double> x;
  for (int k = 0; k < policy.horizon(); ++k) {
    const Matrix& g = policy.gains[k];
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) x.push_back(g(i, j));
    }
    for (Eigen::Index i = 0; i < g.rows(); ++i) x.push_back(policy.feedforward[k](i));
  }
  return x;
}

class AffineObjective : public ceres::FirstOrderFunction {
 public:
  explicit AffineObjective(const LinearGaussianProblem& p) : problem_(p) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    try {
      Tape tape;
      const TapedAffineCost c = analytic_cost(tape, problem_, unpack(problem_, parameters));
      *cost = c.total.scalar();
      if (!std::isfinite(*cost)) return false;
      if (*cost < best_cost_) {
        best_cost_ = *cost;
        best_.assign(parameters, parameters + NumParameters());
      }
      if (gradient != nullptr) {
        const Gradient g = tape.backward(c.total);
        double* out = gradient;
        for (const Var& leaf : c.leaves) {
          const Matrix& m = g.at(leaf.id());
          for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) *out++ = m(i, j);
          }
        }
      }
      return true;
    } catch (const SingularityError&) {
      return false;
    }
  }

  int NumParameters() const override { return static_cast<int>(parameter_count(problem_)); }

  /// Lowest-cost point evaluated so far; line-search failures leave the solver's own iterate unusable.
  const std::vector<double>& best() const noexcept { return best_; }
  double best_cost() const noexcept { return best_cost_; }

 private:
  const LinearGaussianProblem& problem_;
  mutable std::vector<double> best_;
  mutable double best_cost_ = std::numeric_limits<double>::infinity();
};

class CostRecorder : public ceres::IterationCallback {
 public:
  explicit CostRecorder(std::vector<double>& history) : history_(history) {}
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
    if (s.step_is_successful || s.iteration == 0) history_.push_back(s.cost);
    return ceres::SOLVER_CONTINUE;
  }

 private:
  std::vector<double>& history_;
};

}  // namespace

AffineSolution optimize_affine(const LinearGaussianProblem& problem, int iterations, int restarts,
                               std::uint64_t seed) {
  problem.validate();
  if (iterations < 0) throw ConfigError("iterations", "must be nonnegative");
  if (restarts < 1) throw ConfigError("restarts", "must be positive");
  AffineSolution best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    AffinePolicy start = AffinePolicy::zeros(problem.horizon, problem.a.rows(), problem.b.cols());
    if (r > 0) {
      CounterRng rng(seed, "restart-" + std::to_string(r));
      for (Matrix& g : start.gains) g = 0.1 * standard_normal(g.rows(), g.cols(), rng);
    }
    std::vector<double> x = pack(start);
    std::vector<double> history;
    CostRecorder recorder(history);
    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.function_tolerance = 1e-15;
    options.gradient_tolerance = 1e-12;
    options.parameter_tolerance = 1e-14;
    options.logging_type = ceres::SILENT;
    options.callbacks.push_back(&recorder);
    auto* objective = new AffineObjective(problem);
    ceres::GradientProblem gp(objective);
    // A failed line search (steep log-det barrier) resumes from the best point seen.
    int remaining = iterations;
    double previous = std::numeric_limits<double>::infinity();
    while (remaining > 0) {
      options.max_num_iterations = remaining;
      ceres::GradientProblemSolver::Summary summary;
      ceres::Solve(options, gp, x.data(), &summary);
      remaining -= std::max<int>(1, static_cast<int>(summary.iterations.size()) - 1);
      if (!objective->best().empty()) x = objective->best();
      if (summary.termination_type != ceres::FAILURE || !(objective->best_cost() < previous)) break;
      previous = objective->best_cost();
    }
    const AffinePolicy policy = unpack(problem, x.data());
    const AffineCost cost = analytic_cost(
        propagate(problem.a, problem.b, policy, problem.initial.mean(), problem.initial.covariance()), policy,
        problem.lambda, problem.target);
    best.restart_costs.push_back(cost.total);
    if (cost.total < best_cost) {
      best_cost = cost.total;
      best.policy = policy;
      best.cost = cost;
      best.history = std::move(history);
    }
  }
  if (!std::isfinite(best_cost)) {
    throw ConvergenceError("optimize_affine: no restart reached a finite cost", best_cost);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Conic export

void SdpProblem::add(int matrix, int block, int row, int col, double value) {
  if (matrix < 0 || matrix > num_vars) throw IndexError("SdpProblem: matrix index out of range");
  if (block < 1 || block > static_cast<int>(block_sizes.size())) throw IndexError("SdpProblem: block");
  const int size = std::abs(block_sizes[block - 1]);
  if (row > col) std::swap(row, col);
  if (row < 1 || col > size) throw IndexError("SdpProblem: entry outside block");
  if (block_sizes[block - 1] < 0 && row != col) throw ContractError("SdpProblem: diagonal block entry off diagonal");
  if (value == 0.0) return;
  const auto key = std::make_tuple(matrix, block, row, col);
  const double merged = entries[key] + value;
  if (merged == 0.0) {
    entries.erase(key);
  } else {
    entries[key] = merged;
  }
}

Matrix SdpProblem::block_value(int block, const Vector& x) const {
  if (x.size() != num_vars) throw DimensionError("SdpProblem: point dimension");
  const int size = std::abs(block_sizes.at(block - 1));
  Matrix f = Matrix::Zero(size, size);
  for (const auto& [key, value] : entries) {
    const auto [mat, blk, i, j] = key;
    if (blk != block) continue;
    const double w = mat == 0 ? -value : value * x(mat - 1);
    f(i - 1, j - 1) += w;
    if (i != j) f(j - 1, i - 1) += w;
  }
  return f;
}

double SdpProblem::objective_value(const Vector& x) const {
  if (x.size() != num_vars) throw DimensionError("SdpProblem: point dimension");
  double v = objective_constant;
  for (int i = 0; i < num_vars; ++i) v += objective[i] * x(i);
  return v;
}

namespace {

/// Variable registry plus linear expressions used while building the program.
class SdpBuilder {
 public:
  struct Expr {
    std::map<int, double> terms;  // 1-based variable -> coefficient
    double constant = 0.0;
  };

  int scalar(std::string name) {
    names_.push_back(std::move(name));
    return static_cast<int>(names_.size());
  }
  /// Symmetric matrix variable; returns index(i, j) for every i, j.
  Eigen::MatrixXi symmetric(const std::string& name, Eigen::Index n) {
    Eigen::MatrixXi idx(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) idx(i, j) = idx(j, i) = scalar(fmt::format("{}[{},{}]", name, i, j));
    }
    return idx;
  }
  Eigen::MatrixXi general(const std::string& name, Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXi idx(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) idx(i, j) = scalar(fmt::format("{}[{},{}]", name, i, j));
    }
    return idx;
  }
  Eigen::VectorXi vector(const std::string& name, Eigen::Index n) {
    Eigen::VectorXi idx(n);
    for (Eigen::Index i = 0; i < n; ++i) idx(i) = scalar(fmt::format("{}[{}]", name, i));
    return idx;
  }

  std::vector<std::string> names_;
};

using Expr = SdpBuilder::Expr;

/// Adds coef * (L X R^T)(i, j) for a variable matrix X given by its index map.
void add_product(Expr& e, const Matrix& l, const Eigen::MatrixXi& x, const Matrix& r, Eigen::Index i, Eigen::Index j,
                 double coef) {
  for (Eigen::Index p = 0; p < x.rows(); ++p) {
    for (Eigen::Index q = 0; q < x.cols(); ++q) {
      const double w = coef * l(i, p) * r(j, q);
      if (w != 0.0) e.terms[x(p, q)] += w;
    }
  }
}

}  // namespace

SdpProblem export_sdp(const LinearGaussianProblem& problem, int log_cuts, SdpLayout* layout) {
  problem.validate();
  if (log_cuts < 1) throw ConfigError("log_cuts", "must be positive");
  const Matrix& a = problem.a;
  const Matrix& b = problem.b;
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  const int horizon = problem.horizon;

  SdpBuilder vars;
  std::vector<Eigen::VectorXi> mean(horizon + 1), ff(horizon);
  std::vector<Eigen::MatrixXi> cov(horizon + 1), u(horizon), y(horizon);
  std::vector<int> effort(horizon);
  for (int k = 0; k < horizon; ++k) {
    ff[k] = vars.vector(fmt::format("v{}", k), m);
    u[k] = vars.general(fmt::format("U{}", k), n, m);
    y[k] = vars.symmetric(fmt::format("Y{}", k), m);
    effort[k] = vars.scalar(fmt::format("t{}", k));
    mean[k + 1] = vars.vector(fmt::format("mu{}", k + 1), n);
    cov[k + 1] = vars.symmetric(fmt::format("S{}", k + 1), n);
  }
  const int mean_slack = vars.scalar("s");
  Eigen::MatrixXi z = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) z(i, j) = vars.scalar(fmt::format("Z[{},{}]", i, j));
  }
  const Eigen::VectorXi w = vars.vector("w", n);

  SdpProblem sdp;
  sdp.num_vars = static_cast<int>(vars.names_.size());
  sdp.var_names = vars.names_;
  sdp.objective.assign(sdp.num_vars, 0.0);

  // Blocks: N coupling LMIs, N effort epigraphs, mean epigraph, log-det, LP.
  for (int k = 0; k < horizon; ++k) sdp.block_sizes.push_back(static_cast<int>(n + m));
  for (int k = 0; k < horizon; ++k) sdp.block_sizes.push_back(static_cast<int>(1 + m));
  sdp.block_sizes.push_back(static_cast<int>(1 + n));
  sdp.block_sizes.push_back(static_cast<int>(2 * n));
  const int sym = static_cast<int>(n * (n + 1) / 2);
  const int lp_rows = 2 * horizon * static_cast<int>(n) + 2 * horizon * sym + static_cast<int>(n) * log_cuts;
  sdp.block_sizes.push_back(-lp_rows);
  const int mean_block = 2 * horizon + 1;
  const int logdet_block = mean_block + 1;
  const int lp_block = logdet_block + 1;

  const Matrix& cov0 = problem.initial.covariance();
  const Vector& mean0 = problem.initial.mean();

  // [[S_k, U_k], [U_k^T, Y_k]] >= 0
  for (int k = 0; k < horizon; ++k) {
    const int blk = k + 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        if (k == 0) {
          sdp.add(0, blk, i + 1, j + 1, -cov0(i, j));
        } else {
          sdp.add(cov[k](i, j), blk, i + 1, j + 1, 1.0);
        }
      }
      for (Eigen::Index j = 0; j < m; ++j) sdp.add(u[k](i, j), blk, i + 1, n + j + 1, 1.0);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j) sdp.add(y[k](i, j), blk, n + i + 1, n + j + 1, 1.0);
    }
  }
  // [[t_k, v_k^T], [v_k, I]] >= 0
  for (int k = 0; k < horizon; ++k) {
    const int blk = horizon + k + 1;
    sdp.add(effort[k], blk, 1, 1, 1.0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sdp.add(ff[k](i), blk, 1, i + 2, 1.0);
      sdp.add(0, blk, i + 2, i + 2, -1.0);
    }
  }
  // [[s, (mu_N - mu_f)^T], [mu_N - mu_f, Sigma_f]] >= 0
  const Vector& mu_f = problem.target.mean();
  const Matrix& cov_f = problem.target.covariance();
  sdp.add(mean_slack, mean_block, 1, 1, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    sdp.add(mean[horizon](i), mean_block, 1, i + 2, 1.0);
    sdp.add(0, mean_block, 1, i + 2, mu_f(i));
    for (Eigen::Index j = i; j < n; ++j) sdp.add(0, mean_block, i + 2, j + 2, -cov_f(i, j));
  }
  // [[S_N, Z], [Z^T, Diag(Z)]] >= 0 with Z lower triangular, so prod Z_ii <= det S_N.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) sdp.add(cov[horizon](i, j), logdet_block, i + 1, j + 1, 1.0);
    for (Eigen::Index j = 0; j <= i; ++j) sdp.add(z(i, j), logdet_block, i + 1, n + j + 1, 1.0);
    sdp.add(z(i, i), logdet_block, n + i + 1, n + i + 1, 1.0);
  }

  int row = 0;
  auto emit = [&](const Expr& e) {
    ++row;
    for (const auto& [var, coef] : e.terms) sdp.add(var, lp_block, row, row, coef);
    sdp.add(0, lp_block, row, row, -e.constant);
  };
  auto emit_equal = [&](Expr e) {
    emit(e);
    for (auto& [var, coef] : e.terms) coef = -coef;
    e.constant = -e.constant;
    emit(e);
  };
  const Matrix eye_n = Matrix::Identity(n, n);
  for (int k = 0; k < horizon; ++k) {
    // mu_{k+1} - A mu_k - B v_k = 0
    for (Eigen::Index i = 0; i < n; ++i) {
      Expr e;
      e.terms[mean[k + 1](i)] += 1.0;
      if (k == 0) {
        e.constant -= a.row(i).dot(mean0);
      } else {
        for (Eigen::Index p = 0; p < n; ++p) e.terms[mean[k](p)] -= a(i, p);
      }
      for (Eigen::Index p = 0; p < m; ++p) e.terms[ff[k](p)] -= b(i, p);
      emit_equal(e);
    }
    // S_{k+1} - (A S_k A^T + A U_k B^T + B U_k^T A^T + B Y_k B^T) = 0
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        Expr e;
        e.terms[cov[k + 1](i, j)] += 1.0;
        if (k == 0) {
          e.constant -= (a * cov0 * a.transpose())(i, j);
        } else {
          add_product(e, a, cov[k], a, i, j, -1.0);
        }
        add_product(e, a, u[k], b, i, j, -1.0);
        add_product(e, a, u[k], b, j, i, -1.0);
        add_product(e, b, y[k], b, i, j, -1.0);
        emit_equal(e);
      }
    }
  }
  // w_i <= log c + (Z_ii - c) / c at geometrically spaced points c.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < log_cuts; ++c) {
      const double point = log_cuts == 1 ? 1.0 : std::pow(10.0, -4.0 + 8.0 * c / (log_cuts - 1));
      Expr e;
      e.terms[z(i, i)] += 1.0 / point;
      e.terms[w(i)] -= 1.0;
      e.constant = std::log(point) - 1.0;
      emit(e);
    }
  }

  // effort + lambda/2 (tr(Sf^-1 S_N) + s - sum w + log det Sf - n)
  const double half = 0.5 * problem.lambda;
  for (int k = 0; k < horizon; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) sdp.objective[y[k](i, i) - 1] += 1.0;
    sdp.objective[effort[k] - 1] += 1.0;
  }
  const Matrix p = cov_f.inverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) sdp.objective[cov[horizon](i, j) - 1] += half * p(i, j);
    sdp.objective[w(i) - 1] -= half;
  }
  sdp.objective[mean_slack - 1] += half;
  sdp.objective_constant = half * (problem.target.log_det_covariance() - static_cast<double>(n));

  if (layout != nullptr) *layout = SdpLayout{horizon, horizon, lp_rows, log_cuts};
  return sdp;
}

Vector sdp_point(const LinearGaussianProblem& problem, const AffinePolicy& policy) {
  problem.validate();
  const MomentTrajectory t =
      propagate(problem.a, problem.b, policy, problem.initial.mean(), problem.initial.covariance());
  const Eigen::Index n = problem.a.rows();
  const Eigen::Index m = problem.b.cols();
  std::vector<double> x;
  for (int k = 0; k < problem.horizon; ++k) {
    const Vector& v = policy.feedforward[k];
    const Matrix u = t.covariances[k] * policy.gains[k].transpose();
    const Matrix y = policy.gains[k] * u;
    for (Eigen::Index i = 0; i < m; ++i) x.push_back(v(i));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) x.push_back(u(i, j));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j) x.push_back(0.5 * (y(i, j) + y(j, i)));
    }
    x.push_back(v.squaredNorm());
    const Vector& mu = t.means[k + 1];
    for (Eigen::Index i = 0; i < n; ++i) x.push_back(mu(i));
    const Matrix& s = t.covariances[k + 1];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) x.push_back(s(i, j));
    }
  }
  const Vector d = t.means.back() - problem.target.mean();
  x.push_back(d.dot(problem.target.covariance().llt().solve(d)));
  // Z = L diag(L) gives Z Diag(Z)^-1 Z^T = S_N and prod Z_ii = det S_N.
  Eigen::LLT<Eigen::MatrixXd> llt(t.covariances.back());
  if (llt.info() != Eigen::Success) throw SingularityError("sdp_point: terminal covariance not positive definite");
  const Matrix l = llt.matrixL();
  const Matrix z = l * l.diagonal().asDiagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) x.push_back(z(i, j));
  }
  for (Eigen::Index i = 0; i < n; ++i) x.push_back(std::log(z(i, i)));
  return Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

std::string to_sdpa(const SdpProblem& p) {
  std::string out;
  out += fmt::format("* dsteer conic export\n* constant {:.17g}\n", p.objective_constant);
  for (std::size_t i = 0; i < p.var_names.size(); ++i) out += fmt::format("* var {} {}\n", i + 1, p.var_names[i]);
  out += fmt::format("{}\n{}\n", p.num_vars, p.block_sizes.size());
  for (std::size_t i = 0; i < p.block_sizes.size(); ++i) out += fmt::format("{}{}", i ? " " : "", p.block_sizes[i]);
  out += "\n";
  for (int i = 0; i < p.num_vars; ++i) out += fmt::format("{}{:.17g}", i ? " " : "", p.objective[i]);
  out += "\n";
  for (const auto& [key, value] : p.entries) {
    const auto [mat, blk, i, j] = key;
    out += fmt::format("{} {} {} {} {:.17g}\n", mat, blk, i, j, value);
  }
  return out;
}

SdpProblem parse_sdpa(const std::string& text) {
  SdpProblem p;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '*' || line[0] == '"') {
      std::istringstream c(line.substr(1));
      std::string tag;
      c >> tag;
      if (tag == "constant") {
        c >> p.objective_constant;
      } else if (tag == "var") {
        std::size_t idx = 0;
        std::string name;
        c >> idx >> name;
        if (idx != p.var_names.size() + 1) throw ContractError("parse_sdpa: variable names out of order");
        p.var_names.push_back(name);
      }
      continue;
    }
    body.push_back(line);
  }
  if (body.size() < 4) throw ContractError("parse_sdpa: truncated header");
  // SDPA allows punctuation between header numbers.
  auto numbers = [](std::string s) {
    for (char& ch : s) {
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    }
    std::istringstream ss(s);
    std::vector<double> v;
    double d = 0.0;
    while (ss >> d) v.push_back(d);
    return v;
  };
  p.num_vars = static_cast<int>(numbers(body[0]).at(0));
  const int blocks = static_cast<int>(numbers(body[1]).at(0));
  for (double d : numbers(body[2])) p.block_sizes.push_back(static_cast<int>(d));
  if (static_cast<int>(p.block_sizes.size()) != blocks) throw ContractError("parse_sdpa: block structure length");
  p.objective = numbers(body[3]);
  if (static_cast<int>(p.objective.size()) != p.num_vars) throw ContractError("parse_sdpa: objective length");
  if (!p.var_names.empty() && static_cast<int>(p.var_names.size()) != p.num_vars) {
    throw ContractError("parse_sdpa: variable name count");
  }
  for (std::size_t r = 4; r < body.size(); ++r) {
    const std::vector<double> e = numbers(body[r]);
    if (e.size() != 5) throw ContractError(fmt::format("parse_sdpa: malformed entry line {}", r + 1));
    p.add(static_cast<int>(e[0]), static_cast<int>(e[1]), static_cast<int>(e[2]), static_cast<int>(e[3]), e[4]);
  }
  return p;
}

void write_benchmark_csv(const std::string& path, const std::string& instance, const AffineCost& cost) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_benchmark_csv: cannot open " + path);
  out << "instance,cost,effort,kl\n"
      << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", instance, cost.total, cost.effort, cost.kl);
}

}  // namespace dsteer

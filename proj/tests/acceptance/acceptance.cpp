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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Trains all four presets at full budget.
//
//   acceptance [--only 3,4,7] [--presets DIR] [--work DIR]

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/SVD>

#include "dsteer/config.hpp"
#include "dsteer/covsteer.hpp"
#include "dsteer/errors.hpp"
#include "dsteer/experiment.hpp"
#include "dsteer/flow.hpp"
#include "dsteer/metrics.hpp"
#include "dsteer/trainer.hpp"

namespace fs = std::filesystem;
using namespace dsteer;

namespace {

/// Collects sub-check lines for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    lines_.push_back(fmt::format("    {} {}", ok ? "ok  " : "FAIL", what));
  }
  void note(const std::string& what) { lines_.push_back("    " + what); }
  bool ok() const { return ok_; }
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  bool ok_ = true;
  std::vector<std::string> lines_;
};

struct Outcome {
  bool pass = false;
  std::string title;
  std::vector<std::string> lines;
  double seconds = 0.0;
};

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return m;
}

Matrix random_spd(Eigen::Index n, std::mt19937_64& gen) {
  const Matrix g = random_matrix(n, n, gen);
  return g * g.transpose() + 0.3 * Matrix::Identity(n, n);
}

// ---------------------------------------------------------------------------
// Trained presets, shared by criteria 1, 2, 5, 6 and 10.

struct PresetRun {
  ExperimentConfig cfg;
  RunArtifacts art;
  double untrained_w2 = 0.0;
};

class Presets {
 public:
  Presets(fs::path presets, fs::path work) : presets_(std::move(presets)), work_(std::move(work)) {}

  const PresetRun& get(const std::string& name) {
    auto it = runs_.find(name);
    if (it != runs_.end()) return it->second;
    return runs_.emplace(name, run(name, "")).first->second;
  }

  /// A second independent run of a preset into its own directory.
  PresetRun rerun(const std::string& name) { return run(name, "-repeat"); }

 private:
  PresetRun run(const std::string& name, const std::string& suffix) {
    ConfigOverrides o;
    o.threads = 1;
    o.output = (work_ / (name + suffix)).string();
    fs::remove_all(*o.output);
    PresetRun r{load_experiment(presets_ / (name + ".cfg"), o), {}, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    r.art = run_experiment(r.cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Zero policy: untrained stack (zero final layer) on the same report states and target draws.
    const PolicyStack untrained =
        PolicyStack::create(r.cfg.system.horizon(), r.cfg.widths, r.cfg.activation, r.cfg.budget, r.cfg.seed);
    ReportOptions opts;
    opts.eval_samples = r.cfg.eval_samples;
    opts.seed = r.cfg.seed;
    opts.reduction = r.cfg.logdet;
    const RolloutBatch batch = simulate(r.cfg.system, untrained, report_states(r.cfg.source, opts), opts.chunk);
    r.untrained_w2 = score(name, batch, r.cfg.target, 0.0, opts).w2;
    fmt::print("  trained {}{} in {:.1f}s: W2 {:.4f} (untrained {:.4f})\n", name, suffix, secs, r.art.metrics.w2,
               r.untrained_w2);
    std::fflush(stdout);
    return r;
  }

  fs::path presets_;
  fs::path work_;
  std::map<std::string, PresetRun> runs_;
};

// ---------------------------------------------------------------------------
// Criteria

Check benchmark_equivalence(Presets& presets) {
  Check c;
  const PresetRun& r = presets.get("example1");
  if (!r.art.benchmark || !r.art.trained) {
    c.expect(false, "benchmark and training both ran");
    return c;
  }
  const double bench = r.art.benchmark->total;
  const double lambda = r.cfg.train.lambda;
  const auto& recs = r.art.trained->log.records;
  double lowest = std::numeric_limits<double>::infinity();
  for (const ConvergenceRecord& rec : recs) lowest = std::min(lowest, rec.cost(lambda));
  const double final_cost = recs.back().cost(lambda);
  c.note(fmt::format("benchmark {:.4f}, final NN cost {:.4f} at step {}", bench, final_cost, recs.back().step));
  c.expect(r.cfg.train.batch == 256 && r.cfg.train.steps <= 5000 && r.cfg.train.threads == 1,
           fmt::format("desk scale: batch {}, {} steps, {} thread", r.cfg.train.batch, r.cfg.train.steps,
                       r.cfg.train.threads));
  c.expect(std::abs(final_cost - bench) <= 0.05 * bench,
           fmt::format("final within 5%: {:+.3f}%", 100.0 * (final_cost - bench) / bench));
  c.expect(lowest >= 0.99 * bench,
           fmt::format("never more than 1% below: lowest {:.4f} ({:+.3f}%)", lowest, 100.0 * (lowest - bench) / bench));
  c.expect(r.art.metrics.train_minutes <= 20.0, fmt::format("training {:.2f} min <= 20", r.art.metrics.train_minutes));
  return c;
}

Check table_reproduction(Presets& presets) {
  Check c;
  const PresetRun& e1 = presets.get("example1");
  c.expect(e1.art.metrics.w2 <= 1.5, fmt::format("example1 W2 {:.4f} <= 1.5", e1.art.metrics.w2));
  const PresetRun& e4 = presets.get("example4");
  c.expect(e4.art.metrics.w2 <= 0.4, fmt::format("example4 W2 {:.4f} <= 0.4", e4.art.metrics.w2));
  for (const char* name : {"example1", "example2", "example3", "example4"}) {
    const PresetRun& r = presets.get(name);
    c.expect(r.art.metrics.w2 <= 0.25 * r.untrained_w2,
             fmt::format("{} trained/untrained W2 {:.4f}/{:.4f} = {:.3f} <= 0.25", name, r.art.metrics.w2,
                         r.untrained_w2, r.art.metrics.w2 / r.untrained_w2));
  }
  return c;
}

Check change_of_variables() {
  Check c;
  // Zero policy on the double integrator pushing the example-1 source.
  const SystemSpec sys = double_integrator_2d(0.1, 30);
  Vector mu(4);
  mu << 0, 0, 5, 8;
  Matrix sigma = Matrix::Zero(4, 4);
  sigma.diagonal() << 1, 1, 0.2, 0.2;
  const GaussianSpec source(mu, sigma);
  const PolicyStack zero = PolicyStack::create(sys.horizon(), {4, 16, 2}, Activation::kTanh, {0.9, {9.0}}, 0);
  const Matrix a = *sys.linear_dynamics();
  Matrix an = Matrix::Identity(4, 4);
  for (int k = 0; k < sys.horizon(); ++k) an = a * an;
  const GaussianSpec pushed(an * mu, an * sigma * an.transpose());

  std::mt19937_64 gen(31);
  const Matrix x0 = random_matrix(100, 4, gen, -4.0, 4.0).rowwise() + mu.transpose();
  const RolloutBatch b = simulate(sys, zero, x0);
  // Density of the flow at y = F(x): p_0(x) / det dF(x).
  const Vector ml = source.log_pdf(x0) - b.total_logdet();
  const Vector exact = pushed.log_pdf(b.terminal());
  const double err = (ml - exact).cwiseAbs().maxCoeff();
  const double rel = ((ml.array().exp() - exact.array().exp()).abs() / exact.array().exp()).maxCoeff();
  c.expect(err < 1e-10, fmt::format("log-density max error {:.2e} < 1e-10 on 100 points", err));
  c.expect(rel < 1e-10, fmt::format("density max relative error {:.2e} < 1e-10", rel));

  // Reconstructed KL against the matched target: mean NLL minus the source entropy.
  const Eigen::Index m = 100000;
  CounterRng rng(32, "cov-kl");
  const Matrix xs = source.sample(m, rng);
  const RolloutBatch big = simulate(sys, zero, xs, 4096);
  const Vector nll = -(pushed.log_pdf(big.terminal()) + big.total_logdet());
  const double kl = nll.mean() - source.entropy();
  const double se = std::sqrt((nll.array() - nll.mean()).square().sum() / (m - 1) / m);
  c.expect(std::abs(kl) < 3.0 * se, fmt::format("reconstructed KL {:+.2e}, |KL| < 3 SE = {:.2e}", kl, 3.0 * se));
  return c;
}

Check gradient_correctness() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  // 2 states, 2 steps, 8-wide hidden layers, nonlinear drift, obstacles and a mixture target.
  const SystemSpec sys = saturating_drift_2d(2);
  const ObstacleField field({{Vector::Constant(2, 0.4), 0.8, 2.0}, {Vector::Constant(2, -0.8), 1.1, 1.5}},
                            ObstacleField::coordinate_projector(2, {0, 1}));
  std::mt19937_64 gen(8);
  const Distribution target(GmmSpec({0.3, 0.7}, {GaussianSpec(Vector::Constant(2, 1.0), 0.5 * Matrix::Identity(2, 2)),
                                                  GaussianSpec(Vector::Constant(2, -0.5), random_spd(2, gen))}));
  const SteeringProblem p{sys, Distribution(GaussianSpec(Vector::Zero(2), Matrix::Identity(2, 2))), target, field};
  const LipschitzBudget budget{0.9, {(1.0 - sys.drift_lipschitz(0)) / sys.input_norm(0)}};
  PolicyStack stack = PolicyStack::create(2, {2, 8, 8, 1}, Activation::kTanh, budget, 7);
  for (Matrix* w : stack.parameters()) *w = 1.5 * random_matrix(w->rows(), w->cols(), gen);
  stack.power_iterate(100);
  const Matrix x0 = random_matrix(5, 2, gen, -1.5, 1.5);
  const double lambda = 3.0;

  using Pick = Var LossNodes::*;
  const std::vector<std::pair<const char*, Pick>> terms{{"effort", &LossNodes::effort},
                                                        {"potential", &LossNodes::potential},
                                                        {"nll (log-det path)", &LossNodes::nll},
                                                        {"total", &LossNodes::total}};
  for (const auto& [label, pick] : terms) {
    Tape tape;
    const BoundPolicy bound = stack.bind(tape);
    const LossNodes nodes = total_loss(rollout(sys, bound, tape.constant(x0)), field, target, lambda);
    const Gradient grad = tape.backward(nodes.*pick);
    double worst = 0.0;
    for (std::size_t i = 0; i < bound.leaves().size(); ++i) {
      Matrix& theta = *stack.parameters()[i];
      Matrix fd(theta.rows(), theta.cols());
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double orig = theta.data()[j];
        const double h = 1e-6 * std::max(1.0, std::abs(orig));
        auto f = [&](double v) {
          theta.data()[j] = v;
          Tape t;
          const LossNodes n = total_loss(rollout(sys, stack.bind(t), t.constant(x0)), field, target, lambda);
          return (n.*pick).scalar();
        };
        fd.data()[j] = (f(orig + h) - f(orig - h)) / (2.0 * h);
        theta.data()[j] = orig;
      }
      const Matrix& g = grad[bound.leaves()[i]];
      const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
      worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / scale);
    }
    c.expect(worst < 1e-4, fmt::format("{}: max relative error {:.2e} < 1e-4", label, worst));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 60.0, fmt::format("runtime {:.2f}s < 60s", secs));
  return c;
}

Check invertibility(Presets& presets) {
  Check c;
  for (const char* name : {"example1", "example4"}) {
    const PresetRun& r = presets.get(name);
    const PolicyStack& stack = r.art.trained->policy;
    const SystemSpec& sys = r.cfg.system;
    double worst_rate = 0.0;
    for (int k = 0; k < sys.horizon(); ++k) worst_rate = std::max(worst_rate, contraction_rate(sys, stack.budget(), k));
    c.expect(worst_rate < 1.0, fmt::format("{} budget alpha L_pi sigma_B + L_phi max over steps {:.4f} < 1", name,
                                           worst_rate));

    ReportOptions opts;
    opts.eval_samples = 1000;
    opts.seed = r.cfg.seed + 1;
    const Matrix x0 = report_states(r.cfg.source, opts);
    const RolloutBatch fwd = simulate(sys, stack, x0);
    const Matrix back = invert_flow(sys, stack, fwd.terminal(), 1e-12, 500);
    const double err = (back - x0).rowwise().norm().maxCoeff();
    c.expect(err < 1e-6, fmt::format("{} inversion round trip max {:.2e} < 1e-6 on 1000 samples", name, err));

    // Per-step Jacobians by central differences, independent of the tape log-det.
    const Eigen::Index n = sys.state_dim();
    double min_det = std::numeric_limits<double>::infinity();
    double worst_logdet = 0.0;
    const double h = 1e-6;
    for (int k = 0; k < sys.horizon(); ++k) {
      const Matrix& xk = fwd.states(k);
      std::vector<Matrix> cols;
      for (Eigen::Index j = 0; j < n; ++j) {
        Matrix up = xk, down = xk;
        up.col(j).array() += h;
        down.col(j).array() -= h;
        cols.push_back((step(sys, stack, k, up).next - step(sys, stack, k, down).next) / (2.0 * h));
      }
      for (Eigen::Index b = 0; b < xk.rows(); ++b) {
        Matrix jac(n, n);
        for (Eigen::Index j = 0; j < n; ++j) jac.col(j) = cols[j].row(b).transpose();
        const double det = jac.determinant();
        min_det = std::min(min_det, det);
        if (det > 0.0) worst_logdet = std::max(worst_logdet, std::abs(std::log(det) - fwd.logdets()(b, k)));
      }
    }
    c.expect(min_det > 0.0, fmt::format("{} min per-step det {:.4e} > 0 over {} steps x 1000 samples", name, min_det,
                                        sys.horizon()));
    c.note(fmt::format("{} tape log-det vs finite-difference Jacobian: max gap {:.1e}", name, worst_logdet));
  }
  return c;
}

Check spectral_normalization(Presets& presets) {
  Check c;
  for (const char* name : {"example1", "example2", "example3", "example4"}) {
    const PresetRun& r = presets.get(name);
    const PolicyStack& stack = r.art.trained->policy;
    double worst_sv = 0.0;
    for (int k = 0; k < stack.horizon(); ++k) {
      for (const DenseLayer& layer : stack.step(k).layers()) {
        const Eigen::JacobiSVD<Matrix> svd(layer.normalized_weight());
        worst_sv = std::max(worst_sv, svd.singularValues()(0));
      }
    }
    c.expect(worst_sv <= 1.0 + 1e-3, fmt::format("{} largest singular value {:.6f} <= 1.001", name, worst_sv));

    // Pairs near the trained trajectories plus wide random pairs.
    const RolloutBatch b = simulate(r.cfg.system, stack, report_states(r.cfg.source, {200, r.cfg.seed + 2}));
    std::mt19937_64 gen(r.cfg.seed + 3);
    const Eigen::Index n = r.cfg.system.state_dim();
    double worst_ratio = 0.0;
    for (int k = 0; k < stack.horizon(); ++k) {
      const double cap = stack.budget().output_scale(k);
      const Matrix& xk = b.states(k);
      for (double spread : {1e-3, 0.1, 1.0, 5.0}) {
        const Matrix y = xk + spread * random_matrix(xk.rows(), n, gen);
        const Matrix du = stack.act(k, xk) - stack.act(k, y);
        const Vector ratio = du.rowwise().norm().array() / (xk - y).rowwise().norm().array();
        worst_ratio = std::max(worst_ratio, ratio.maxCoeff() / cap);
      }
    }
    c.expect(worst_ratio <= 1.0, fmt::format("{} max difference quotient / (alpha L_pi) = {:.4f} <= 1", name,
                                             worst_ratio));
  }
  return c;
}

Check moment_propagation() {
  Check c;
  std::mt19937_64 gen(71);
  const Eigen::Index samples = 100000;
  int failures = 0;
  double worst_mean = 0.0, worst_cov = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index n = 2 + inst % 3;
    const Eigen::Index m = 1 + inst % 2;
    const int horizon = 3 + inst % 4;
    const Matrix a = Matrix::Identity(n, n) + random_matrix(n, n, gen, -0.2, 0.2);
    const Matrix bm = random_matrix(n, m, gen);
    AffinePolicy pol = AffinePolicy::zeros(horizon, n, m);
    for (int k = 0; k < horizon; ++k) {
      pol.gains[k] = 0.4 * random_matrix(m, n, gen);
      pol.feedforward[k] = random_matrix(m, 1, gen);
    }
    const Vector mu0 = random_matrix(n, 1, gen, -2.0, 2.0);
    const Matrix s0 = random_spd(n, gen);
    const MomentTrajectory t = propagate(a, bm, pol, mu0, s0);

    CounterRng rng(100 + inst, "moments");
    Matrix x = GaussianSpec(mu0, s0).sample(samples, rng);
    bool ok = true;
    for (int k = 0; k <= horizon; ++k) {
      const Vector mean = x.colwise().mean();
      const Matrix centered = x.rowwise() - mean.transpose();
      const Matrix cov = centered.transpose() * centered / static_cast<double>(samples - 1);
      const Matrix& s = t.covariances[k];
      // Standard errors of the mean vector and of the covariance matrix in Euclidean/Frobenius norm:
      // E||mean - mu||^2 = tr(S)/M, E||cov - S||_F^2 = (tr(S)^2 + ||S||_F^2)/M.
      const double se_mean = std::sqrt(s.trace() / samples);
      const double se_cov = std::sqrt((s.trace() * s.trace() + s.squaredNorm()) / samples);
      const double zm = (mean - t.means[k]).norm() / se_mean;
      const double zc = (cov - s).norm() / se_cov;
      worst_mean = std::max(worst_mean, zm);
      worst_cov = std::max(worst_cov, zc);
      ok = ok && zm < 3.0 && zc < 3.0;
      if (k == horizon) break;
      const Matrix u = ((x.rowwise() - t.means[k].transpose()) * pol.gains[k].transpose()).rowwise() +
                       pol.feedforward[k].transpose();
      x = x * a.transpose() + u * bm.transpose();
    }
    if (!ok) ++failures;
  }
  c.expect(failures == 0, fmt::format("{} of 20 instances outside 3 SE (10^5 samples, every step)", failures));
  c.note(fmt::format("worst deviation: mean {:.2f} SE, covariance {:.2f} SE", worst_mean, worst_cov));
  return c;
}

Check gaussian_kl_formula() {
  Check c;
  std::mt19937_64 gen(81);
  const Eigen::Index samples = 100000;
  int failures = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index n = 1 + inst % 4;
    const GaussianSpec a(random_matrix(n, 1, gen), random_spd(n, gen));
    const GaussianSpec b(random_matrix(n, 1, gen), random_spd(n, gen));
    CounterRng rng(200 + inst, "kl");
    const Matrix x = a.sample(samples, rng);
    const Vector d = a.log_pdf(x) - b.log_pdf(x);
    const double se = std::sqrt((d.array() - d.mean()).square().sum() / (samples - 1) / samples);
    const double z = std::abs(d.mean() - gaussian_kl(a, b)) / se;
    worst = std::max(worst, z);
    if (!(z < 3.0)) ++failures;
  }
  c.expect(failures == 0, fmt::format("{} of 20 random SPD pairs outside 3 SE (worst {:.2f} SE)", failures, worst));

  const GaussianSpec std2(Vector::Zero(2), Matrix::Identity(2, 2));
  c.expect(gaussian_kl(std2, std2) == 0.0, "KL(N(0,I) || N(0,I)) = 0");
  const double shifted = gaussian_kl(GaussianSpec(Vector::Unit(2, 0), Matrix::Identity(2, 2)), std2);
  c.expect(std::abs(shifted - 0.5) < 1e-14, fmt::format("KL(N(e1,I) || N(0,I)) = {:.16f} vs 0.5", shifted));
  const double scaled = gaussian_kl(GaussianSpec(Vector::Zero(2), 2.0 * Matrix::Identity(2, 2)), std2);
  c.expect(std::abs(scaled - (1.0 - std::log(2.0))) < 1e-14,
           fmt::format("KL(N(0,2I) || N(0,I)) = {:.16f} vs 1 - log 2", scaled));
  return c;
}

double brute_force_w2(const Matrix& x, const Matrix& y) {
  std::vector<Eigen::Index> perm(x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) cost += (x.row(i) - y.row(perm[i])).squaredNorm();
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / x.rows());
}

Check ot_metric() {
  Check c;
  std::mt19937_64 gen(91);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Eigen::Index m = 1 + inst % 7;
    const Eigen::Index d = 1 + inst % 3;
    const Matrix x = random_matrix(m, d, gen, -2.0, 2.0);
    const Matrix y = random_matrix(m, d, gen, -2.0, 2.0);
    worst = std::max(worst, std::abs(w2_exact(x, y).distance - brute_force_w2(x, y)));
  }
  c.expect(worst < 1e-12, fmt::format("50 instances M <= 7 vs permutation enumeration: max gap {:.1e}", worst));

  Vector ma(2), mb(2);
  ma << 0.0, 0.0;
  mb << 2.5, -1.0;
  const GaussianSpec a(ma, random_spd(2, gen));
  const GaussianSpec b(mb, random_spd(2, gen));
  CounterRng rng(92, "w2");
  const double empirical = w2_exact(a.sample(1000, rng), b.sample(1000, rng)).distance;
  const double exact = gaussian_w2(a, b);
  c.expect(std::abs(empirical - exact) <= 0.1 * exact,
           fmt::format("M = 1000 empirical {:.4f} vs Gaussian closed form {:.4f} ({:+.2f}%)", empirical, exact,
                       100.0 * (empirical - exact) / exact));
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Replaces one named column with '*' (wall-clock columns differ between runs by construction).
std::string mask_column(const std::string& csv, const std::string& column) {
  std::istringstream in(csv);
  std::string line, out;
  std::getline(in, line);
  out = line + "\n";
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    for (std::string cell; std::getline(h, cell, ',');) header.push_back(cell);
  }
  const auto idx = std::find(header.begin(), header.end(), column) - header.begin();
  while (std::getline(in, line)) {
    std::istringstream r(line);
    std::string cell;
    for (long i = 0; std::getline(r, cell, ','); ++i) out += (i ? "," : "") + (i == idx ? std::string("*") : cell);
    out += "\n";
  }
  return out;
}

Check determinism(Presets& presets) {
  Check c;
  const PresetRun& first = presets.get("example4");
  const PresetRun second = presets.rerun("example4");
  const std::map<std::string, std::string> timed{{"convergence.csv", "seconds"}, {"metrics.csv", "train_minutes"}};
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(first.art.dir)) {
    if (entry.path().extension() != ".csv") continue;
    const std::string name = entry.path().filename().string();
    std::string a = slurp(entry.path());
    std::string b = slurp(second.art.dir / name);
    if (auto it = timed.find(name); it != timed.end()) {
      a = mask_column(a, it->second);
      b = mask_column(b, it->second);
      name == "metrics.csv" ? c.note("metrics.csv: train_minutes masked") : c.note("convergence.csv: seconds masked");
    }
    c.expect(!a.empty() && a == b, fmt::format("example4 {} byte-identical ({} bytes)", name, a.size()));
    ++compared;
  }
  c.expect(slurp(first.art.dir / "policy.ckpt") == slurp(second.art.dir / "policy.ckpt"),
           "example4 policy.ckpt byte-identical");
  c.expect(compared >= 3, fmt::format("{} CSV files compared", compared));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string only;
  std::string presets_dir = DSTEER_PRESET_DIR;
  std::string work_dir = (fs::temp_directory_path() / "dsteer-acceptance").string();
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_option("--presets", presets_dir, "preset directory");
  app.add_option("--work", work_dir, "scratch directory for preset runs");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  {
    std::istringstream in(only);
    for (std::string tok; std::getline(in, tok, ',');) {
      if (!tok.empty()) selected.insert(std::stoi(tok));
    }
  }
  fs::create_directories(work_dir);
  Presets presets(presets_dir, work_dir);

  const std::vector<std::tuple<int, std::string, std::function<Check()>>> criteria{
      {3, "change-of-variables exactness", change_of_variables},
      {4, "gradient correctness", gradient_correctness},
      {7, "moment propagation", moment_propagation},
      {8, "Gaussian KL formula", gaussian_kl_formula},
      {9, "OT metric", ot_metric},
      {1, "benchmark equivalence", [&] { return benchmark_equivalence(presets); }},
      {2, "terminal W2 bands", [&] { return table_reproduction(presets); }},
      {5, "invertibility", [&] { return invertibility(presets); }},
      {6, "spectral normalization", [&] { return spectral_normalization(presets); }},
      {10, "determinism", [&] { return determinism(presets); }},
  };

  std::map<int, Outcome> outcomes;
  for (const auto& [id, title, fn] : criteria) {
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    o.title = title;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Check c = fn();
      o.pass = c.ok();
      o.lines = c.lines();
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("    FAIL exception: ") + e.what());
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("[{}] {:>2} {} ({:.1f}s)\n", o.pass ? "PASS" : "FAIL", id, title, o.seconds);
    for (const std::string& l : o.lines) fmt::print("{}\n", l);
    std::fflush(stdout);
    outcomes.emplace(id, std::move(o));
  }

  int failed = 0;
  fmt::print("\nsummary\n");
  for (const auto& [id, o] : outcomes) {
    fmt::print("{} {:>2} {}\n", o.pass ? "PASS" : "FAIL", id, o.title);
    failed += o.pass ? 0 : 1;
  }
  fmt::print("{} of {} criteria passed\n", outcomes.size() - failed, outcomes.size());
  return failed == 0 ? 0 : 1;
}

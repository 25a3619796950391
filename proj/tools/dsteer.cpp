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

// dsteer: run, benchmark, emit-figures and validate experiments.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "dsteer/errors.hpp"
#include "dsteer/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kDiverged = 3;

struct Args {
  std::string config;
  std::string positional;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> threads;
  bool quiet = false;
};

dsteer::ExperimentConfig load(const Args& a) {
  const std::string path = !a.config.empty() ? a.config : a.positional;
  if (path.empty()) throw dsteer::ConfigError("config", "no config file given (--config PATH)");
  if (!std::filesystem::exists(path)) throw dsteer::ConfigError("config", "no such file '" + path + "'");
  return dsteer::load_experiment(path, {a.seed, a.steps, a.threads, a.out});
}

int cmd_validate(const Args& a) {
  const dsteer::ExperimentConfig cfg = load(a);
  std::string widths;
  for (auto w : cfg.widths) widths += (widths.empty() ? "" : " ") + std::to_string(w);
  fmt::print("{}: ok\n  system {} (n = {}, m = {}, N = {})\n  source {}, target {}, {} obstacle(s)\n"
             "  policy widths [{}], alpha {}, max contraction {:.4f}\n  train lambda {}, batch {}, steps {}\n",
             cfg.name, cfg.system.name(), cfg.system.state_dim(), cfg.system.input_dim(), cfg.system.horizon(),
             cfg.source.kind(), cfg.target.kind(), cfg.obstacles.obstacles().size(), widths, cfg.budget.alpha,
             [&] {
               double worst = 0.0;
               for (int k = 0; k < cfg.system.horizon(); ++k) {
                 worst = std::max(worst, dsteer::contraction_rate(cfg.system, cfg.budget, k));
               }
               return worst;
             }(),
             cfg.train.lambda, cfg.train.batch, cfg.train.steps);
  return kOk;
}

int cmd_run(const Args& a) {
  const dsteer::ExperimentConfig cfg = load(a);
  dsteer::ProgressFn progress;
  if (!a.quiet) {
    progress = [&](const dsteer::ConvergenceRecord& r) {
      fmt::print(stderr, "step {:>6}  cost {:>12.4f}  effort {:>10.4f}  potential {:>9.4f}  kl {:>9.4f}  {:>7.1f}s\n",
                 r.step, r.cost(cfg.train.lambda), r.loss.effort, r.loss.potential, r.kl_estimate, r.seconds);
    };
  }
  const dsteer::RunArtifacts art = dsteer::run_experiment(cfg, progress);
  fmt::print("{}: w2 {:.4f}  min|logdet| {:.4f}  train {:.2f} min\n", cfg.name, art.metrics.w2,
             art.metrics.min_abs_logdet, art.metrics.train_minutes);
  if (art.benchmark) fmt::print("affine benchmark cost {:.6f}\n", art.benchmark->total);
  fmt::print("{} files in {}\n", art.files.size(), art.dir.string());
  return kOk;
}

int cmd_benchmark(const Args& a) {
  const dsteer::ExperimentConfig cfg = load(a);
  const std::filesystem::path dir = dsteer::output_directory(cfg);
  const dsteer::BenchmarkArtifacts b = dsteer::run_benchmark(cfg, dir);
  fmt::print("{}: affine optimum {:.6f} (effort {:.6f}, kl {:.6f})\n", cfg.name, b.solution.cost.total,
             b.solution.cost.effort, b.solution.cost.kl);
  for (const auto& f : b.files) fmt::print("  {}\n", (dir / f).string());
  return kOk;
}

int cmd_figures(const Args& a) {
  const std::string dir = a.out ? *a.out : a.positional;
  if (dir.empty()) throw dsteer::ConfigError("out", "no run directory given (--out DIR)");
  if (!std::filesystem::is_directory(dir)) throw dsteer::ConfigError("out", "no such run directory '" + dir + "'");
  dsteer::RunLock lock(dir);
  for (const auto& f : dsteer::emit_figures(dir)) fmt::print("{}\n", (std::filesystem::path(dir) / f).string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution steering with invertible neural flows"};
  app.require_subcommand(1);
  Args args;
  auto common = [&](CLI::App* sub, bool training) {
    sub->add_option("config_path", args.positional, "Experiment config (same as --config)");
    sub->add_option("--config", args.config, "Experiment config file");
    sub->add_option("--out", args.out, "Output directory (default $DSTEER_OUT_ROOT/<name>)");
    if (training) {
      sub->add_option("--seed", args.seed, "Override experiment.seed");
      sub->add_option("--steps", args.steps, "Override train.steps")->check(CLI::NonNegativeNumber);
      sub->add_option("--threads", args.threads, "Override train.threads")->check(CLI::PositiveNumber);
      sub->add_flag("--quiet", args.quiet, "No per-evaluation progress lines");
    }
  };
  CLI::App* run = app.add_subcommand("run", "Train, evaluate and report one experiment");
  common(run, true);
  CLI::App* bench = app.add_subcommand("benchmark", "Affine optimum and SDPA export for a linear-Gaussian config");
  common(bench, false);
  bench->add_option("--seed", args.seed, "Override experiment.seed");
  CLI::App* figs = app.add_subcommand("emit-figures", "Redraw the SVG figures of a run directory");
  figs->add_option("run_dir", args.positional, "Run directory (same as --out)");
  figs->add_option("--out", args.out, "Run directory");
  CLI::App* validate = app.add_subcommand("validate", "Check a config and print its assembled summary");
  common(validate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(args);
    if (*bench) return cmd_benchmark(args);
    if (*figs) return cmd_figures(args);
    return cmd_validate(args);
  } catch (const dsteer::ConfigError& e) {
    fmt::print(stderr, "invalid configuration: {}\n", e.what());
    return kInvalid;
  } catch (const dsteer::DivergenceError& e) {
    fmt::print(stderr, "training diverged: {} (term '{}', step {})\n", e.what(), e.term(), e.step());
    return kDiverged;
  } catch (const dsteer::SingularityError& e) {
    fmt::print(stderr, "training diverged: {}\n", e.what());
    return kDiverged;
  } catch (const dsteer::ContractError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvalid;
  } catch (const dsteer::DimensionError& e) {
    fmt::print(stderr, "invalid configuration: {}\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}

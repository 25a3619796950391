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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dsteer/config.hpp"
#include "dsteer/covsteer.hpp"
#include "dsteer/errors.hpp"
#include "dsteer/experiment.hpp"
#include "dsteer/flow.hpp"
#include "dsteer/metrics.hpp"

namespace py = pybind11;
using namespace dsteer;

namespace {

py::dict cost_dict(const AffineCost& c) {
  py::dict d;
  d["total"] = c.total;
  d["effort"] = c.effort;
  d["kl"] = c.kl;
  return d;
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["experiment"] = m.experiment;
  d["w2"] = m.w2;
  d["min_abs_logdet"] = m.min_abs_logdet;
  d["train_minutes"] = m.train_minutes;
  d["eval_samples"] = m.eval_samples;
  d["seed"] = m.seed;
  return d;
}

ConfigOverrides overrides(std::optional<std::uint64_t> seed, std::optional<int> steps,
                          std::optional<std::string> out) {
  ConfigOverrides o;
  o.seed = seed;
  o.steps = steps;
  o.output = std::move(out);
  o.threads = 1;
  return o;
}

}  // namespace

PYBIND11_MODULE(_dsteer, m) {
  m.doc() = "Distribution steering with invertible residual policies";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  m.def(
      "gaussian_kl",
      [](const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b, const Matrix& cov_b) {
        return gaussian_kl(GaussianSpec(mean_a, cov_a), GaussianSpec(mean_b, cov_b));
      },
      py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"), "KL(N_a || N_b) in closed form.");

  m.def(
      "gaussian_w2",
      [](const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b, const Matrix& cov_b) {
        return gaussian_w2(GaussianSpec(mean_a, cov_a), GaussianSpec(mean_b, cov_b));
      },
      py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));

  m.def(
      "w2_exact",
      [](const Matrix& x, const Matrix& y) {
        const W2Result r = w2_exact(x, y);
        return py::make_tuple(r.distance, r.plan.assignment);
      },
      py::arg("x"), py::arg("y"), "Exact empirical W2 and the optimal assignment (row i of x to row a[i] of y).");

  m.def(
      "propagate",
      [](const Matrix& a, const Matrix& b, const std::vector<Matrix>& gains, const std::vector<Vector>& feedforward,
         const Vector& mean0, const Matrix& cov0) {
        const MomentTrajectory t = propagate(a, b, AffinePolicy{gains, feedforward}, mean0, cov0);
        return py::make_tuple(t.means, t.covariances);
      },
      py::arg("a"), py::arg("b"), py::arg("gains"), py::arg("feedforward"), py::arg("mean0"), py::arg("cov0"),
      "Means and covariances under u_k = K_k (x_k - mu_k) + v_k.");

  m.def(
      "benchmark",
      [](const std::string& config, std::optional<std::uint64_t> seed) {
        const ExperimentConfig cfg = load_experiment(config, overrides(seed, std::nullopt, std::nullopt));
        py::gil_scoped_release release;
        const AffineSolution s =
            optimize_affine(benchmark_problem(cfg), cfg.benchmark_iterations, cfg.benchmark_restarts, cfg.seed);
        py::gil_scoped_acquire acquire;
        py::dict d = cost_dict(s.cost);
        d["restart_costs"] = s.restart_costs;
        d["gains"] = s.policy.gains;
        d["feedforward"] = s.policy.feedforward;
        return d;
      },
      py::arg("config"), py::arg("seed") = py::none(), "Affine covariance-steering optimum for a linear-Gaussian config.");

  m.def(
      "export_sdpa",
      [](const std::string& config, int log_cuts) {
        return to_sdpa(export_sdp(benchmark_problem(load_experiment(config)), log_cuts));
      },
      py::arg("config"), py::arg("log_cuts") = 24, "SDPA sparse text of the covariance-steering SDP.");

  m.def(
      "validate",
      [](const std::string& config) {
        const ExperimentConfig cfg = load_experiment(config);
        py::dict d;
        d["name"] = cfg.name;
        d["system"] = cfg.system.name();
        d["state_dim"] = cfg.system.state_dim();
        d["input_dim"] = cfg.system.input_dim();
        d["horizon"] = cfg.system.horizon();
        d["source"] = cfg.source.kind();
        d["target"] = cfg.target.kind();
        d["widths"] = cfg.widths;
        d["steps"] = cfg.train.steps;
        d["lambda"] = cfg.train.lambda;
        return d;
      },
      py::arg("config"), "Parse and validate a config; raises ConfigError naming the field.");

  m.def(
      "run",
      [](const std::string& config, std::optional<std::string> out, std::optional<std::uint64_t> seed,
         std::optional<int> steps) {
        const ExperimentConfig cfg = load_experiment(config, overrides(seed, steps, std::move(out)));
        RunArtifacts art;
        {
          py::gil_scoped_release release;
          art = run_experiment(cfg);
        }
        py::dict d;
        d["dir"] = art.dir;
        d["files"] = art.files;
        d["metrics"] = metrics_dict(art.metrics);
        if (art.benchmark) d["benchmark"] = cost_dict(*art.benchmark);
        return d;
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(), py::arg("steps") = py::none(),
      "Train, evaluate and write all artifacts; returns metrics and the file list.");

  m.def(
      "rollout",
      [](const std::string& checkpoint, const std::string& config, const Matrix& x0) {
        const ExperimentConfig cfg = load_experiment(config);
        const PolicyStack stack = PolicyStack::load(checkpoint);
        const RolloutBatch b = simulate(cfg.system, stack, x0);
        std::vector<Matrix> states, controls;
        for (int k = 0; k <= b.horizon(); ++k) states.push_back(b.states(k));
        for (int k = 0; k < b.horizon(); ++k) controls.push_back(b.controls(k));
        return py::make_tuple(states, controls, Matrix(b.logdets()));
      },
      py::arg("checkpoint"), py::arg("config"), py::arg("x0"),
      "Closed-loop rollout of a saved policy: (states, controls, per-step log-dets).");

  m.def(
      "invert",
      [](const std::string& checkpoint, const std::string& config, const Matrix& xn) {
        const ExperimentConfig cfg = load_experiment(config);
        return invert_flow(cfg.system, PolicyStack::load(checkpoint), xn);
      },
      py::arg("checkpoint"), py::arg("config"), py::arg("xn"), "Inverse flow by fixed-point iteration.");
}

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

#ifndef DSTEER_CONFIG_HPP_
#define DSTEER_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsteer/covsteer.hpp"
#include "dsteer/metrics.hpp"
#include "dsteer/trainer.hpp"

namespace dsteer {

/**
 * @brief Fully assembled experiment, read from an INI file.
 *
 * Sections and keys are listed in docs/config.md; unknown sections or keys are
 * rejected with a ConfigError naming "section.key".
 */
struct ExperimentConfig {
  std::filesystem::path file;
  std::string name;
  std::uint64_t seed = 0;
  std::string output;  // empty: $DSTEER_OUT_ROOT/<name>

  SystemSpec system;
  Distribution source;
  Distribution target;
  ObstacleField obstacles;

  std::vector<Eigen::Index> widths;
  Activation activation = Activation::kTanh;
  LipschitzBudget budget;
  TrainConfig train;

  Eigen::Index eval_samples = 1000;
  LogdetReduction logdet = LogdetReduction::kTotal;

  int benchmark_iterations = 2000;
  int benchmark_restarts = 5;
  int benchmark_log_cuts = 24;

  SteeringProblem problem() const { return SteeringProblem{system, source, target, obstacles}; }
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> threads;
  std::optional<std::string> output;
};

/// Parses, validates and assembles; relative sample-file paths resolve against the config's directory.
ExperimentConfig load_experiment(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// The linear-Gaussian instance behind a config. Throws ConfigError when the system is not
/// linear time-invariant or a boundary distribution is not Gaussian.
LinearGaussianProblem benchmark_problem(const ExperimentConfig& cfg);

}  // namespace dsteer

#endif  // DSTEER_CONFIG_HPP_

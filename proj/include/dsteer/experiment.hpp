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

#ifndef DSTEER_EXPERIMENT_HPP_
#define DSTEER_EXPERIMENT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsteer/config.hpp"

namespace dsteer {

/// $DSTEER_OUT_ROOT/<name> (default root "runs") unless the config names an output directory.
std::filesystem::path output_directory(const ExperimentConfig& cfg);

/// Exclusive claim on a run directory through an O_EXCL lock file; released on destruction.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path file_;
};

struct BenchmarkArtifacts {
  AffineSolution solution;
  std::vector<std::filesystem::path> files;
};

/// Affine optimum plus SDPA export into `dir` (benchmark.csv, problem.dat-s).
BenchmarkArtifacts run_benchmark(const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct RunArtifacts {
  std::filesystem::path dir;
  /// Relative to `dir`, in emission order; manifest.json lists all of them.
  std::vector<std::filesystem::path> files;
  std::optional<TrainResult> trained;
  MetricsReport metrics;
  std::optional<AffineCost> benchmark;
};

/// Assemble, train, evaluate, benchmark (when linear-Gaussian), report and draw figures.
RunArtifacts run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Snapshot scatters at k in {0, N/4, N/2, 3N/4, N} and the convergence plot, from a run directory.
std::vector<std::filesystem::path> emit_figures(const std::filesystem::path& run_dir);

std::string sha256_file(const std::filesystem::path& path);

/// manifest.json with path, byte count and SHA-256 of every listed file.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::filesystem::path>& files);

}  // namespace dsteer

#endif  // DSTEER_EXPERIMENT_HPP_

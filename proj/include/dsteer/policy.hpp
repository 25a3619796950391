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

#ifndef DSTEER_POLICY_HPP_
#define DSTEER_POLICY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dsteer/jet.hpp"
#include "dsteer/rng.hpp"

namespace dsteer {

enum class Activation { kTanh, kSoftplus };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct SpectralEstimate {
  Matrix normalized;
  double sigma = 0.0;
};

/**
 * Runs `iters` power-iteration steps on `w`, updating the persistent vectors in
 * place, and returns w / max(1, sigma). A zero matrix is returned unchanged with
 * sigma = 0.
 */
SpectralEstimate spectral_normalize(const Matrix& w, Vector& left, Vector& right, int iters);

struct DenseLayer {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out
  Vector left;    // power-iteration vector, size out
  Vector right;   // power-iteration vector, size in
  double sigma = 0.0;

  Matrix normalized_weight() const;
};

/// MLP whose every weight is spectrally normalized, so its Lipschitz constant is at most 1.
class MlpPolicy {
 public:
  /// Uniform(+-1/sqrt(fan_in)) weights, zero final layer, converged spectral estimates.
  MlpPolicy(std::vector<Eigen::Index> widths, Activation activation, CounterRng& rng);
  MlpPolicy(std::vector<DenseLayer> layers, Activation activation);

  const std::vector<Eigen::Index>& widths() const noexcept { return widths_; }
  Activation activation() const noexcept { return activation_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  void power_iterate(int iters);
  /// Power-iterates each layer until sigma changes by less than tol * sigma; ConvergenceError past max_iters.
  void converge_spectral(double tol = 1e-13, int max_iters = 200000);
  Matrix evaluate(const Matrix& x) const;

 private:
  std::vector<Eigen::Index> widths_;
  std::vector<DenseLayer> layers_;
  Activation activation_;
};

/// u_k = alpha * L_k * pi_hat_k(x) with L_k = (1 - L_phi,k) / sigma_B,k unless overridden.
struct LipschitzBudget {
  double alpha = 0.9;
  std::vector<double> lipschitz;  // one per step, or one shared

  double lipschitz_at(int k) const { return lipschitz.size() == 1 ? lipschitz[0] : lipschitz.at(k); }
  double output_scale(int k) const { return alpha * lipschitz_at(k); }
};

class BoundPolicy;

/// One independent MlpPolicy per step of the horizon.
class PolicyStack {
 public:
  PolicyStack(std::vector<MlpPolicy> steps, LipschitzBudget budget, std::uint64_t seed = 0);

  static PolicyStack create(int horizon, const std::vector<Eigen::Index>& widths,
                            Activation activation, LipschitzBudget budget, std::uint64_t seed);

  int horizon() const noexcept { return static_cast<int>(steps_.size()); }
  const LipschitzBudget& budget() const noexcept { return budget_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const MlpPolicy& step(int k) const;
  MlpPolicy& step(int k);

  Matrix act(int k, const Matrix& x) const;
  void power_iterate(int iters);
  void converge_spectral(double tol = 1e-13, int max_iters = 200000);

  /// Weights then bias of every layer of every step, in order.
  std::vector<Matrix*> parameters();
  /// Puts steps [first, last) on `tape`; as parameter leaves when `trainable`, else as constants.
  /// `last` < 0 means the horizon.
  BoundPolicy bind(Tape& tape, bool trainable = true, int first = 0, int last = -1) const;

  void save(const std::string& path) const;
  static PolicyStack load(const std::string& path);

  friend bool operator==(const PolicyStack& a, const PolicyStack& b);

 private:
  std::vector<MlpPolicy> steps_;
  LipschitzBudget budget_;
  std::uint64_t seed_;
};

/// Tape view of a PolicyStack: parameter leaves plus normalized weights for one pass.
class BoundPolicy {
 public:
  Jet act(int k, const Jet& x) const;
  /// Same order as PolicyStack::parameters().
  const std::vector<Var>& leaves() const noexcept { return leaves_; }

 private:
  friend class PolicyStack;
  struct Layer {
    Var weight;
    Var bias;
  };
  std::vector<std::vector<Layer>> steps_;
  int first_ = 0;
  std::vector<Var> leaves_;
  std::vector<double> scales_;
  Activation activation_ = Activation::kTanh;
};

}  // namespace dsteer

#endif  // DSTEER_POLICY_HPP_

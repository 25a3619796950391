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

#ifndef DSTEER_DISTRIBUTIONS_HPP_
#define DSTEER_DISTRIBUTIONS_HPP_

#include <string>
#include <variant>
#include <vector>

#include "dsteer/rng.hpp"
#include "dsteer/tape.hpp"

namespace dsteer {

/// Multivariate normal N(mean, covariance) with a cached Cholesky factor.
class GaussianSpec {
 public:
  /// Throws ContractError unless `covariance` is symmetric (to 1e-12) and positive definite.
  GaussianSpec(Vector mean, Matrix covariance);

  Eigen::Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return covariance_; }
  /// Lower-triangular L with L L^T = covariance.
  const Matrix& cholesky() const noexcept { return cholesky_; }
  double log_det_covariance() const noexcept { return log_det_; }
  /// Differential entropy in nats.
  double entropy() const noexcept;

  Matrix sample(Eigen::Index count, CounterRng& rng) const;
  /// Log density of every row of `x`.
  Vector log_pdf(const Matrix& x) const;
  Var log_pdf(const Var& x) const;

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix cholesky_;
  Matrix cholesky_inverse_;
  double log_det_ = 0.0;
};

/// Finite mixture of Gaussians with simplex weights.
class GmmSpec {
 public:
  GmmSpec(std::vector<double> weights, std::vector<GaussianSpec> components);

  Eigen::Index dim() const noexcept { return components_.front().dim(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<GaussianSpec>& components() const noexcept { return components_; }

  Matrix sample(Eigen::Index count, CounterRng& rng) const;
  Vector log_pdf(const Matrix& x) const;
  Var log_pdf(const Var& x) const;

 private:
  std::vector<double> weights_;
  std::vector<GaussianSpec> components_;
};

/// A finite point cloud; usable as a source only (no density).
class EmpiricalSet {
 public:
  explicit EmpiricalSet(Matrix samples, std::string source = "memory");

  /// Reads M rows of n comma-separated values. A non-numeric first line is a header; '#' starts a comment.
  static EmpiricalSet from_csv(const std::string& path);

  Eigen::Index dim() const noexcept { return samples_.cols(); }
  Eigen::Index count() const noexcept { return samples_.rows(); }
  const Matrix& samples() const noexcept { return samples_; }
  const std::string& source() const noexcept { return source_; }

  /// Uniform resampling with replacement.
  Matrix sample(Eigen::Index count, CounterRng& rng) const;

 private:
  Matrix samples_;
  std::string source_;
};

/**
 * @brief Boundary distribution. Every alternative can be sampled (source role);
 * Gaussian and GMM alternatives also expose a log density (target role).
 */
class Distribution {
 public:
  using Variant = std::variant<GaussianSpec, GmmSpec, EmpiricalSet>;

  Distribution(GaussianSpec g) : impl_(std::move(g)) {}
  Distribution(GmmSpec g) : impl_(std::move(g)) {}
  Distribution(EmpiricalSet e) : impl_(std::move(e)) {}

  Eigen::Index dim() const;
  bool has_pdf() const noexcept { return !std::holds_alternative<EmpiricalSet>(impl_); }
  std::string kind() const;

  Matrix sample(Eigen::Index count, CounterRng& rng) const;
  /// Throws ContractError for sample-only distributions.
  Vector log_pdf(const Matrix& x) const;
  Var log_pdf(const Var& x) const;

  const GaussianSpec* gaussian() const noexcept { return std::get_if<GaussianSpec>(&impl_); }
  const Variant& variant() const noexcept { return impl_; }

 private:
  Variant impl_;
};

/// i.i.d. draws packaged as a point cloud. `count` must be positive.
EmpiricalSet sample(const Distribution& dist, Eigen::Index count, CounterRng& rng);

/// Closed-form D_KL(a || b) between Gaussians of equal dimension.
double gaussian_kl(const GaussianSpec& a, const GaussianSpec& b);

}  // namespace dsteer

#endif  // DSTEER_DISTRIBUTIONS_HPP_

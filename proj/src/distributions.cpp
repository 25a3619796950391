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

#include "dsteer/distributions.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dsteer/errors.hpp"

namespace dsteer {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

GaussianSpec::GaussianSpec(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Eigen::Index n = mean_.size();
  if (n == 0) throw DimensionError("GaussianSpec: empty mean");
  require_shape(covariance_, n, n, "GaussianSpec covariance");
  if (!mean_.allFinite()) throw ContractError("GaussianSpec: non-finite mean");
  require_finite(covariance_, "GaussianSpec covariance");
  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ContractError("GaussianSpec: covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw ContractError("GaussianSpec: covariance is not positive definite");
  }
  cholesky_ = llt.matrixL();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(cholesky_(i, i) > 0.0)) {
      throw ContractError("GaussianSpec: covariance is not positive definite");
    }
    log_det_ += 2.0 * std::log(cholesky_(i, i));
  }
  cholesky_inverse_ = cholesky_.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
}

double GaussianSpec::entropy() const noexcept {
  return 0.5 * static_cast<double>(dim()) * (1.0 + kLog2Pi) + 0.5 * log_det_;
}

Matrix GaussianSpec::sample(Eigen::Index count, CounterRng& rng) const {
  if (count < 1) throw ContractError("sample: count must be positive");
  Matrix z = standard_normal(count, dim(), rng);
  Matrix x = z * cholesky_.transpose();
  x.rowwise() += mean_.transpose();
  return x;
}

Vector GaussianSpec::log_pdf(const Matrix& x) const {
  if (x.cols() != dim()) throw DimensionError("log_pdf: dimension mismatch");
  Matrix centered = x.rowwise() - mean_.transpose();
  Matrix z = centered * cholesky_inverse_.transpose();
  const double constant = -0.5 * (static_cast<double>(dim()) * kLog2Pi + log_det_);
  return (constant - 0.5 * z.rowwise().squaredNorm().array()).matrix();
}

Var GaussianSpec::log_pdf(const Var& x) const {
  if (x.cols() != dim()) throw DimensionError("log_pdf: dimension mismatch");
  Tape& tape = x.tape();
  Var centered = add_bias(x, tape.constant(Matrix(-mean_.transpose())));
  Var z = matmul_nt(centered, tape.constant(cholesky_inverse_));
  const double constant = -0.5 * (static_cast<double>(dim()) * kLog2Pi + log_det_);
  return add_scalar(scale(row_squared_norm(z), -0.5), constant);
}

GmmSpec::GmmSpec(std::vector<double> weights, std::vector<GaussianSpec> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw ContractError("GmmSpec: at least one component required");
  if (weights_.size() != components_.size()) {
    throw DimensionError("GmmSpec: weight and component counts differ");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ContractError("GmmSpec: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ContractError("GmmSpec: weights do not sum to 1");
  for (const auto& c : components_) {
    if (c.dim() != components_.front().dim()) {
      throw DimensionError("GmmSpec: component dimensions differ");
    }
  }
}

Matrix GmmSpec::sample(Eigen::Index count, CounterRng& rng) const {
  if (count < 1) throw ContractError("sample: count must be positive");
  Matrix out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    const double u = uniform01(rng);
    std::size_t c = 0;
    double cumulative = weights_[0];
    while (u >= cumulative && c + 1 < weights_.size()) cumulative += weights_[++c];
    out.row(i) = components_[c].sample(1, rng).row(0);
  }
  return out;
}

Vector GmmSpec::log_pdf(const Matrix& x) const {
  Matrix parts(x.rows(), static_cast<Eigen::Index>(components_.size()));
  for (std::size_t c = 0; c < components_.size(); ++c) {
    parts.col(static_cast<Eigen::Index>(c)) =
        components_[c].log_pdf(x).array() + std::log(weights_[c]);
  }
  Vector peak = parts.rowwise().maxCoeff();
  // Zero-weight components give -inf columns; exp maps them to 0.
  Matrix shifted = parts.colwise() - peak;
  return (peak.array() + shifted.array().exp().rowwise().sum().log()).matrix();
}

Var GmmSpec::log_pdf(const Var& x) const {
  std::vector<Var> parts;
  parts.reserve(components_.size());
  for (std::size_t c = 0; c < components_.size(); ++c) {
    parts.push_back(add_scalar(components_[c].log_pdf(x), std::log(weights_[c])));
  }
  return logsumexp_rows(hcat(parts));
}

EmpiricalSet::EmpiricalSet(Matrix samples, std::string source)
    : samples_(std::move(samples)), source_(std::move(source)) {
  if (samples_.rows() < 1 || samples_.cols() < 1) {
    throw ContractError("EmpiricalSet: at least one sample required");
  }
  require_finite(samples_, "EmpiricalSet");
}

EmpiricalSet EmpiricalSet::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open sample file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("", "non-numeric row in sample file '" + path + "'");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("", "ragged rows in sample file '" + path + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("", "sample file '" + path + "' has no rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return EmpiricalSet(std::move(m), path);
}

Matrix EmpiricalSet::sample(Eigen::Index count, CounterRng& rng) const {
  if (count < 1) throw ContractError("sample: count must be positive");
  std::uniform_int_distribution<Eigen::Index> pick(0, samples_.rows() - 1);
  Matrix out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = samples_.row(pick(rng));
  return out;
}

Eigen::Index Distribution::dim() const {
  return std::visit([](const auto& d) { return d.dim(); }, impl_);
}

std::string Distribution::kind() const {
  switch (impl_.index()) {
    case 0:
      return "gaussian";
    case 1:
      return "gmm";
    default:
      return "samples";
  }
}

Matrix Distribution::sample(Eigen::Index count, CounterRng& rng) const {
  return std::visit([&](const auto& d) { return d.sample(count, rng); }, impl_);
}

Vector Distribution::log_pdf(const Matrix& x) const {
  if (const auto* g = std::get_if<GaussianSpec>(&impl_)) return g->log_pdf(x);
  if (const auto* g = std::get_if<GmmSpec>(&impl_)) return g->log_pdf(x);
  throw ContractError("log_pdf: a sample-only distribution has no explicit density");
}

Var Distribution::log_pdf(const Var& x) const {
  if (const auto* g = std::get_if<GaussianSpec>(&impl_)) return g->log_pdf(x);
  if (const auto* g = std::get_if<GmmSpec>(&impl_)) return g->log_pdf(x);
  throw ContractError("log_pdf: a sample-only distribution has no explicit density");
}

EmpiricalSet sample(const Distribution& dist, Eigen::Index count, CounterRng& rng) {
  return EmpiricalSet(dist.sample(count, rng), dist.kind());
}

double gaussian_kl(const GaussianSpec& a, const GaussianSpec& b) {
  if (a.dim() != b.dim()) throw DimensionError("gaussian_kl: dimension mismatch");
  const auto lb = b.cholesky().triangularView<Eigen::Lower>();
  // tr(Sb^{-1} Sa) = ||Lb^{-1} La||_F^2
  const Matrix m = lb.solve(a.cholesky());
  const Vector d = lb.solve(b.mean() - a.mean());
  const double n = static_cast<double>(a.dim());
  return 0.5 * (m.squaredNorm() + d.squaredNorm() + b.log_det_covariance() -
                a.log_det_covariance() - n);
}

}  // namespace dsteer

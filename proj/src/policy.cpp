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

#include "dsteer/policy.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "dsteer/errors.hpp"

namespace dsteer {

namespace {

Matrix activate(const Matrix& z, Activation a) {
  if (a == Activation::kTanh) return tanh_values(z);
  const auto x = z.array();
  return (x.max(0.0) + (-x.abs()).exp().log1p() - std::numbers::ln2).matrix();
}

Jet activate(const Jet& z, Activation a) {
  return a == Activation::kTanh ? tanh(z) : shifted_softplus(z);
}

void write_row(std::ostream& out, int k, std::size_t l, const char* kind, const double* data,
               Eigen::Index size) {
  out << k << ',' << l << ',' << kind;
  for (Eigen::Index i = 0; i < size; ++i) out << ',' << fmt::format("{:.17g}", data[i]);
  out << '\n';
}

std::vector<double> parse_values(std::stringstream& ss) {
  std::vector<double> values;
  std::string cell;
  while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
  return values;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "softplus") return Activation::kSoftplus;
  throw ConfigError("activation", "unknown activation '" + name + "' (expected tanh or softplus)");
}

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "softplus"; }

SpectralEstimate spectral_normalize(const Matrix& w, Vector& left, Vector& right, int iters) {
  if (iters < 1) throw ContractError("spectral_normalize: iters must be at least 1");
  if (left.size() != w.rows() || right.size() != w.cols()) {
    throw DimensionError("spectral_normalize: power-iteration vectors do not match weight");
  }
  for (int i = 0; i < iters; ++i) {
    Vector v = w.transpose() * left;
    const double vn = v.norm();
    if (vn == 0.0) break;
    right = v / vn;
    Vector u = w * right;
    const double un = u.norm();
    if (un == 0.0) break;
    left = u / un;
  }
  const double sigma = std::max(0.0, left.dot(w * right));
  return {sigma > 1.0 ? Matrix(w / sigma) : w, sigma};
}

Matrix DenseLayer::normalized_weight() const { return sigma > 1.0 ? Matrix(weight / sigma) : weight; }

MlpPolicy::MlpPolicy(std::vector<Eigen::Index> widths, Activation activation, CounterRng& rng)
    : widths_(std::move(widths)), activation_(activation) {
  if (widths_.size() < 2) throw ConfigError("widths", "need at least input and output widths");
  for (Eigen::Index w : widths_) {
    if (w < 1) throw ConfigError("widths", "layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const Eigen::Index in = widths_[l];
    const Eigen::Index out = widths_[l + 1];
    const bool last = l + 2 == widths_.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer;
    layer.weight = Matrix::Zero(out, in);
    layer.bias = Matrix::Zero(1, out);
    if (!last) {
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
      }
      for (Eigen::Index i = 0; i < out; ++i) layer.bias(0, i) = bound * (2.0 * uniform01(rng) - 1.0);
    }
    layer.left = standard_normal(out, 1, rng).col(0).normalized();
    layer.right = Vector::Zero(in);
    layers_.push_back(std::move(layer));
  }
  converge_spectral();
}

MlpPolicy::MlpPolicy(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw ConfigError("widths", "policy needs at least one layer");
  widths_.push_back(layers_.front().weight.cols());
  for (const DenseLayer& l : layers_) {
    if (l.weight.cols() != widths_.back()) throw DimensionError("MlpPolicy: layer widths do not chain");
    require_shape(l.bias, 1, l.weight.rows(), "MlpPolicy bias");
    widths_.push_back(l.weight.rows());
  }
}

void MlpPolicy::power_iterate(int iters) {
  for (DenseLayer& l : layers_) l.sigma = spectral_normalize(l.weight, l.left, l.right, iters).sigma;
}

void MlpPolicy::converge_spectral(double tol, int max_iters) {
  for (DenseLayer& l : layers_) {
    double prev = spectral_normalize(l.weight, l.left, l.right, 1).sigma;
    for (int it = 1;; ++it) {
      const double sigma = spectral_normalize(l.weight, l.left, l.right, 1).sigma;
      const double change = std::abs(sigma - prev);
      prev = sigma;
      if (change <= tol * sigma) break;
      if (it >= max_iters) throw ConvergenceError("spectral norm estimate did not settle", change / sigma);
    }
    l.sigma = prev;
  }
}

Matrix MlpPolicy::evaluate(const Matrix& x) const {
  if (x.cols() != widths_.front()) throw DimensionError("MlpPolicy: input dimension mismatch");
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = h * layers_[l].normalized_weight().transpose();
    z.rowwise() += layers_[l].bias.row(0);
    h = l + 1 < layers_.size() ? activate(z, activation_) : std::move(z);
  }
  return h;
}

PolicyStack::PolicyStack(std::vector<MlpPolicy> steps, LipschitzBudget budget, std::uint64_t seed)
    : steps_(std::move(steps)), budget_(std::move(budget)), seed_(seed) {
  if (!(budget_.alpha > 0.0 && budget_.alpha < 1.0)) {
    throw ConfigError("alpha", "must lie in the open interval (0, 1)");
  }
  if (budget_.lipschitz.size() != 1 && budget_.lipschitz.size() != steps_.size()) {
    throw DimensionError("PolicyStack: need one Lipschitz constant or one per step");
  }
  for (double l : budget_.lipschitz) {
    if (!(l > 0.0)) throw ConfigError("lipschitz", "must be positive");
  }
}

PolicyStack PolicyStack::create(int horizon, const std::vector<Eigen::Index>& widths,
                                Activation activation, LipschitzBudget budget, std::uint64_t seed) {
  CounterRng rng(seed, "init");
  std::vector<MlpPolicy> steps;
  steps.reserve(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) steps.emplace_back(widths, activation, rng);
  return PolicyStack(std::move(steps), std::move(budget), seed);
}

const MlpPolicy& PolicyStack::step(int k) const {
  if (k < 0 || k >= horizon()) throw IndexError("policy step " + std::to_string(k) + " out of range");
  return steps_[static_cast<std::size_t>(k)];
}

MlpPolicy& PolicyStack::step(int k) {
  if (k < 0 || k >= horizon()) throw IndexError("policy step " + std::to_string(k) + " out of range");
  return steps_[static_cast<std::size_t>(k)];
}

Matrix PolicyStack::act(int k, const Matrix& x) const {
  return budget_.output_scale(k) * step(k).evaluate(x);
}

void PolicyStack::power_iterate(int iters) {
  for (MlpPolicy& p : steps_) p.power_iterate(iters);
}

void PolicyStack::converge_spectral(double tol, int max_iters) {
  for (MlpPolicy& p : steps_) p.converge_spectral(tol, max_iters);
}

std::vector<Matrix*> PolicyStack::parameters() {
  std::vector<Matrix*> params;
  for (MlpPolicy& p : steps_) {
    for (DenseLayer& l : p.layers()) {
      params.push_back(&l.weight);
      params.push_back(&l.bias);
    }
  }
  return params;
}

BoundPolicy PolicyStack::bind(Tape& tape, bool trainable, int first, int last) const {
  if (last < 0) last = horizon();
  if (first < 0 || first > last || last > horizon()) throw IndexError("bind: step range out of bounds");
  BoundPolicy bound;
  bound.activation_ = steps_.empty() ? Activation::kTanh : steps_.front().activation();
  bound.first_ = first;
  for (int k = first; k < last; ++k) {
    std::vector<BoundPolicy::Layer> layers;
    for (const DenseLayer& l : steps_[static_cast<std::size_t>(k)].layers()) {
      if (trainable) {
        Var w = tape.parameter(l.weight);
        Var b = tape.parameter(l.bias);
        bound.leaves_.push_back(w);
        bound.leaves_.push_back(b);
        layers.push_back({spectral_normalized(w, l.left, l.right), b});
      } else {
        layers.push_back({tape.constant(l.normalized_weight()), tape.constant(l.bias)});
      }
    }
    bound.steps_.push_back(std::move(layers));
    bound.scales_.push_back(budget_.output_scale(k));
  }
  return bound;
}

Jet BoundPolicy::act(int k, const Jet& x) const {
  const int local = k - first_;
  if (local < 0 || local >= static_cast<int>(steps_.size())) {
    throw IndexError("policy step " + std::to_string(k) + " is not bound");
  }
  const auto& layers = steps_[static_cast<std::size_t>(local)];
  Jet h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Jet z = affine(h, layers[l].weight, layers[l].bias);
    h = l + 1 < layers.size() ? activate(z, activation_) : z;
  }
  return scale(h, scales_[static_cast<std::size_t>(local)]);
}

void PolicyStack::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ContractError("cannot write checkpoint '" + path + "'");
  nlohmann::json header;
  header["format"] = "dsteer-policy";
  header["version"] = 1;
  header["horizon"] = horizon();
  header["widths"] = steps_.empty() ? std::vector<Eigen::Index>{} : steps_.front().widths();
  header["activation"] = steps_.empty() ? "tanh" : to_string(steps_.front().activation());
  header["alpha"] = budget_.alpha;
  header["lipschitz"] = budget_.lipschitz;
  header["seed"] = seed_;
  out << header.dump() << '\n';
  for (int k = 0; k < horizon(); ++k) {
    const auto& layers = steps_[static_cast<std::size_t>(k)].layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const DenseLayer& d = layers[l];
      write_row(out, k, l, "weight", d.weight.data(), d.weight.size());
      write_row(out, k, l, "bias", d.bias.data(), d.bias.size());
      write_row(out, k, l, "left", d.left.data(), d.left.size());
      write_row(out, k, l, "right", d.right.data(), d.right.size());
      write_row(out, k, l, "sigma", &d.sigma, 1);
    }
  }
}

PolicyStack PolicyStack::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open checkpoint '" + path + "'");
  std::string line;
  std::getline(in, line);
  const nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("format", "") != "dsteer-policy") {
    throw ContractError("checkpoint '" + path + "' has an unknown format");
  }
  const int horizon = header.at("horizon").get<int>();
  const auto widths = header.at("widths").get<std::vector<Eigen::Index>>();
  const Activation activation = parse_activation(header.at("activation").get<std::string>());
  LipschitzBudget budget{header.at("alpha").get<double>(),
                         header.at("lipschitz").get<std::vector<double>>()};

  std::vector<std::vector<DenseLayer>> layers(static_cast<std::size_t>(horizon),
                                              std::vector<DenseLayer>(widths.size() - 1));
  for (int k = 0; k < horizon; ++k) {
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      DenseLayer& d = layers[static_cast<std::size_t>(k)][l];
      d.weight = Matrix::Zero(widths[l + 1], widths[l]);
      d.bias = Matrix::Zero(1, widths[l + 1]);
      d.left = Vector::Zero(widths[l + 1]);
      d.right = Vector::Zero(widths[l]);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string k_str, l_str, kind;
    std::getline(ss, k_str, ',');
    std::getline(ss, l_str, ',');
    std::getline(ss, kind, ',');
    const auto k = static_cast<std::size_t>(std::stoul(k_str));
    const auto l = static_cast<std::size_t>(std::stoul(l_str));
    if (k >= layers.size() || l >= layers[k].size()) throw ContractError("checkpoint: bad layer index");
    DenseLayer& d = layers[k][l];
    const std::vector<double> values = parse_values(ss);
    auto fill = [&](double* dst, Eigen::Index size) {
      if (static_cast<Eigen::Index>(values.size()) != size) {
        throw ContractError("checkpoint: wrong value count for " + kind);
      }
      std::copy(values.begin(), values.end(), dst);
    };
    if (kind == "weight") {
      fill(d.weight.data(), d.weight.size());
    } else if (kind == "bias") {
      fill(d.bias.data(), d.bias.size());
    } else if (kind == "left") {
      fill(d.left.data(), d.left.size());
    } else if (kind == "right") {
      fill(d.right.data(), d.right.size());
    } else if (kind == "sigma") {
      fill(&d.sigma, 1);
    } else {
      throw ContractError("checkpoint: unknown row kind '" + kind + "'");
    }
  }
  std::vector<MlpPolicy> steps;
  for (auto& l : layers) steps.emplace_back(std::move(l), activation);
  return PolicyStack(std::move(steps), std::move(budget), header.at("seed").get<std::uint64_t>());
}

bool operator==(const PolicyStack& a, const PolicyStack& b) {
  if (a.horizon() != b.horizon() || a.budget_.alpha != b.budget_.alpha ||
      a.budget_.lipschitz != b.budget_.lipschitz || a.seed_ != b.seed_) {
    return false;
  }
  for (int k = 0; k < a.horizon(); ++k) {
    const auto& la = a.step(k).layers();
    const auto& lb = b.step(k).layers();
    if (la.size() != lb.size() || a.step(k).activation() != b.step(k).activation()) return false;
    for (std::size_t l = 0; l < la.size(); ++l) {
      if (la[l].weight != lb[l].weight || la[l].bias != lb[l].bias || la[l].left != lb[l].left ||
          la[l].right != lb[l].right || la[l].sigma != lb[l].sigma) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace dsteer

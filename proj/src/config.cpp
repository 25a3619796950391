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

#include "dsteer/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dsteer/errors.hpp"

namespace dsteer {

namespace {

namespace pt = boost::property_tree;

/// Message of a ConfigError without its field prefix.
std::string detail(const ConfigError& e) {
  const std::string what = e.what();
  const std::string prefix = e.field() + ": ";
  return !e.field().empty() && what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"name", "seed", "output"}},
      {"system", {"preset", "dt", "horizon", "input_gain", "state_dim", "A", "B"}},
      {"source", {"type", "mean", "variances", "covariance", "weights", "means", "file"}},
      {"target", {"type", "mean", "variances", "covariance", "weights", "means", "file"}},
      {"policy", {"widths", "activation", "alpha", "lipschitz"}},
      {"obstacles", {"centers", "radii", "weights", "dims"}},
      {"train", {"lambda", "batch", "steps", "lr", "beta1", "beta2", "eps", "weight_decay", "eval_every",
                 "eval_samples", "chunk", "threads"}},
      {"evaluation", {"samples", "logdet"}},
      {"benchmark", {"iterations", "restarts", "log_cuts"}},
  };
  return s;
}

/// Typed access to one INI document with field-qualified errors.
class Reader {
 public:
  explicit Reader(pt::ptree tree) : tree_(std::move(tree)) {
    for (const auto& [section, body] : tree_) {
      const auto it = schema().find(section);
      if (!body.data().empty() && body.empty()) throw ConfigError(section, "key outside of any section");
      if (it == schema().end()) throw ConfigError(section, "unknown section");
      for (const auto& [key, value] : body) {
        if (!it->second.contains(key)) throw ConfigError(section + "." + key, "unknown key");
      }
    }
  }

  bool has_section(const std::string& s) const { return tree_.find(s) != tree_.not_found(); }
  bool has(const std::string& s, const std::string& k) const {
    return tree_.get_child_optional(pt::ptree::path_type(s + "." + k, '.')).has_value();
  }

  std::string text(const std::string& s, const std::string& k) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(s + "." + k, '.'));
    if (!v) throw ConfigError(s + "." + k, "required key is missing");
    return trim(*v);
  }
  std::string text(const std::string& s, const std::string& k, const std::string& fallback) const {
    return has(s, k) ? text(s, k) : fallback;
  }

  double number(const std::string& s, const std::string& k) const {
    const std::string t = text(s, k);
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(s + "." + k, "expected a number, got '" + t + "'");
    }
  }
  double number(const std::string& s, const std::string& k, double fallback) const {
    return has(s, k) ? number(s, k) : fallback;
  }

  long long integer(const std::string& s, const std::string& k) const {
    const double v = number(s, k);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(s + "." + k, "expected an integer");
    return static_cast<long long>(v);
  }
  long long integer(const std::string& s, const std::string& k, long long fallback) const {
    return has(s, k) ? integer(s, k) : fallback;
  }

  /// Rows separated by ';', entries by whitespace or ','.
  std::vector<std::vector<double>> rows(const std::string& s, const std::string& k) const {
    std::vector<std::vector<double>> out;
    std::stringstream all(text(s, k));
    std::string row;
    while (std::getline(all, row, ';')) {
      std::replace(row.begin(), row.end(), ',', ' ');
      std::istringstream in(row);
      std::vector<double> values;
      std::string token;
      while (in >> token) {
        try {
          std::size_t used = 0;
          values.push_back(std::stod(token, &used));
          if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
          throw ConfigError(s + "." + k, "expected numbers, got '" + token + "'");
        }
      }
      if (!values.empty()) out.push_back(std::move(values));
    }
    if (out.empty()) throw ConfigError(s + "." + k, "expected at least one value");
    return out;
  }

  Vector vector(const std::string& s, const std::string& k) const {
    const auto r = rows(s, k);
    if (r.size() != 1) throw ConfigError(s + "." + k, "expected a single row");
    return Eigen::Map<const Vector>(r[0].data(), static_cast<Eigen::Index>(r[0].size()));
  }

  Matrix matrix(const std::string& s, const std::string& k) const {
    const auto r = rows(s, k);
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r[0].size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].size() != r[0].size()) throw ConfigError(s + "." + k, "rows have different lengths");
      for (std::size_t j = 0; j < r[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
    }
    return m;
  }

 private:
  static std::string trim(std::string v) {
    const auto first = v.find_first_not_of(" \t\"");
    const auto last = v.find_last_not_of(" \t\"");
    return first == std::string::npos ? std::string() : v.substr(first, last - first + 1);
  }

  pt::ptree tree_;
};

SystemSpec read_system(const Reader& r) {
  const std::string preset = r.text("system", "preset");
  const long long horizon = r.integer("system", "horizon");
  if (horizon < 1 || horizon > 100000) throw ConfigError("system.horizon", "must be a positive step count");
  const int n = static_cast<int>(horizon);
  try {
    if (preset == "double_integrator_2d") return double_integrator_2d(r.number("system", "dt"), n);
    if (preset == "saturating_drift_2d") return saturating_drift_2d(n, r.number("system", "input_gain", 1.0));
    if (preset == "single_integrator") {
      return single_integrator(r.integer("system", "state_dim"), r.number("system", "dt"), n);
    }
    if (preset == "linear") {
      return linear_system(r.matrix("system", "A"), r.matrix("system", "B"), n, r.number("system", "dt", 1.0));
    }
  } catch (const ConfigError& e) {
    if (e.field().find('.') != std::string::npos) throw;
    throw ConfigError("system." + e.field(), detail(e));
  }
  throw ConfigError("system.preset", "unknown preset '" + preset +
                                         "' (double_integrator_2d, saturating_drift_2d, single_integrator, linear)");
}

Matrix covariance_of(const Reader& r, const std::string& s, Eigen::Index n) {
  if (r.has(s, "covariance")) {
    Matrix c = r.matrix(s, "covariance");
    if (c.rows() != n || c.cols() != n) throw ConfigError(s + ".covariance", fmt::format("expected {0}x{0}", n));
    return c;
  }
  const Vector v = r.vector(s, "variances");
  if (v.size() != n) throw ConfigError(s + ".variances", fmt::format("expected {} entries", n));
  return v.asDiagonal();
}

Distribution read_distribution(const Reader& r, const std::string& s, Eigen::Index n,
                               const std::filesystem::path& base) {
  const std::string type = r.text(s, "type");
  try {
    if (type == "gaussian") {
      const Vector mean = r.vector(s, "mean");
      if (mean.size() != n) throw ConfigError(s + ".mean", fmt::format("expected {} entries", n));
      return Distribution(GaussianSpec(mean, covariance_of(r, s, n)));
    }
    if (type == "gmm") {
      const Matrix means = r.matrix(s, "means");
      const Matrix vars = r.matrix(s, "variances");
      const Vector weights = r.vector(s, "weights");
      const Eigen::Index modes = means.rows();
      if (means.cols() != n) throw ConfigError(s + ".means", fmt::format("each mode needs {} entries", n));
      if (weights.size() != modes) throw ConfigError(s + ".weights", "one weight per mode");
      if (vars.cols() != n || (vars.rows() != 1 && vars.rows() != modes)) {
        throw ConfigError(s + ".variances", "one shared row or one row per mode");
      }
      std::vector<GaussianSpec> comps;
      for (Eigen::Index i = 0; i < modes; ++i) {
        comps.emplace_back(Vector(means.row(i).transpose()),
                           Matrix(vars.row(vars.rows() == 1 ? 0 : i).transpose().asDiagonal()));
      }
      return Distribution(GmmSpec(std::vector<double>(weights.data(), weights.data() + modes), std::move(comps)));
    }
    if (type == "samples") {
      std::filesystem::path file = r.text(s, "file");
      if (file.is_relative()) file = base / file;
      EmpiricalSet set = EmpiricalSet::from_csv(file.string());
      if (set.dim() != n) throw ConfigError(s + ".file", fmt::format("samples must have {} columns", n));
      return Distribution(std::move(set));
    }
  } catch (const ContractError& e) {
    throw ConfigError(s, e.what());
  } catch (const ConfigError& e) {
    if (e.field().find('.') != std::string::npos) throw;
    throw ConfigError(s + (e.field().empty() ? "" : "." + e.field()), detail(e));
  }
  throw ConfigError(s + ".type", "unknown distribution type '" + type + "' (gaussian, gmm, samples)");
}

ObstacleField read_obstacles(const Reader& r, Eigen::Index n) {
  if (!r.has_section("obstacles")) return ObstacleField();
  const Matrix centers = r.matrix("obstacles", "centers");
  const Vector radii = r.vector("obstacles", "radii");
  const Vector weights = r.vector("obstacles", "weights");
  std::vector<Eigen::Index> dims{0, 1};
  if (r.has("obstacles", "dims")) {
    dims.clear();
    for (double d : r.vector("obstacles", "dims")) dims.push_back(static_cast<Eigen::Index>(d));
  }
  if (radii.size() != centers.rows() || weights.size() != centers.rows()) {
    throw ConfigError("obstacles.radii", "centers, radii and weights need the same count");
  }
  if (centers.cols() != static_cast<Eigen::Index>(dims.size())) {
    throw ConfigError("obstacles.centers", "center length must match obstacles.dims");
  }
  std::vector<Obstacle> list;
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    list.push_back(Obstacle{Vector(centers.row(i).transpose()), radii(i), weights(i)});
  }
  try {
    return ObstacleField(std::move(list), ObstacleField::coordinate_projector(n, dims));
  } catch (const ConfigError& e) {
    throw ConfigError("obstacles." + e.field(), detail(e));
  }
}

}  // namespace

ExperimentConfig load_experiment(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", fmt::format("{}: {}", path.string(), e.what()));
  }
  const Reader r(std::move(tree));
  const std::filesystem::path base = path.parent_path();

  SystemSpec system = read_system(r);
  const Eigen::Index n = system.state_dim();
  Distribution source = read_distribution(r, "source", n, base);
  Distribution target = read_distribution(r, "target", n, base);
  if (!target.has_pdf()) throw ConfigError("target.type", "the target needs a density (gaussian or gmm)");
  ObstacleField obstacles = read_obstacles(r, n);

  std::vector<Eigen::Index> widths;
  for (double w : r.vector("policy", "widths")) {
    if (w < 1 || w != std::floor(w)) throw ConfigError("policy.widths", "widths must be positive integers");
    widths.push_back(static_cast<Eigen::Index>(w));
  }
  if (widths.size() < 2) throw ConfigError("policy.widths", "need at least input and output widths");
  if (widths.front() != n) throw ConfigError("policy.widths", fmt::format("first width must equal state dim {}", n));
  if (widths.back() != system.input_dim()) {
    throw ConfigError("policy.widths", fmt::format("last width must equal input dim {}", system.input_dim()));
  }
  Activation activation = Activation::kTanh;
  try {
    activation = parse_activation(r.text("policy", "activation", "tanh"));
  } catch (const ConfigError& e) {
    throw ConfigError("policy.activation", detail(e));
  }
  const double alpha = r.number("policy", "alpha", 0.9);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("policy.alpha", "must lie in (0, 1)");
  LipschitzBudget budget{alpha, {}};
  if (r.has("policy", "lipschitz") && r.text("policy", "lipschitz") != "auto") {
    const double l = r.number("policy", "lipschitz");
    if (!(l > 0.0)) throw ConfigError("policy.lipschitz", "must be positive");
    budget.lipschitz.push_back(l);
  } else {
    for (int k = 0; k < system.horizon(); ++k) {
      budget.lipschitz.push_back((1.0 - system.drift_lipschitz(k)) / system.input_norm(k));
    }
  }
  try {
    check_budget(system, budget);
  } catch (const ConfigError& e) {
    throw ConfigError("policy.lipschitz", detail(e));
  }

  TrainConfig train;
  train.lambda = r.number("train", "lambda", train.lambda);
  train.batch = r.integer("train", "batch", train.batch);
  train.steps = static_cast<int>(r.integer("train", "steps", train.steps));
  train.adam.lr = r.number("train", "lr", train.adam.lr);
  train.adam.beta1 = r.number("train", "beta1", train.adam.beta1);
  train.adam.beta2 = r.number("train", "beta2", train.adam.beta2);
  train.adam.eps = r.number("train", "eps", train.adam.eps);
  train.adam.weight_decay = r.number("train", "weight_decay", train.adam.weight_decay);
  train.eval_every = static_cast<int>(r.integer("train", "eval_every", train.eval_every));
  train.eval_samples = r.integer("train", "eval_samples", train.eval_samples);
  train.chunk = r.integer("train", "chunk", train.chunk);
  train.threads = static_cast<int>(r.integer("train", "threads", train.threads));

  const long long seed = r.integer("experiment", "seed", 0);
  if (seed < 0) throw ConfigError("experiment.seed", "must be nonnegative");
  train.seed = overrides.seed.value_or(static_cast<std::uint64_t>(seed));
  if (overrides.steps) train.steps = *overrides.steps;
  if (overrides.threads) train.threads = *overrides.threads;
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("train." + e.field(), detail(e));
  }

  const long long eval_samples = r.integer("evaluation", "samples", 1000);
  if (eval_samples < 1 || eval_samples > kMaxAssignmentSize) {
    throw ConfigError("evaluation.samples", fmt::format("must lie in [1, {}]", kMaxAssignmentSize));
  }
  const std::string logdet = r.text("evaluation", "logdet", "total");
  if (logdet != "total" && logdet != "per_step") throw ConfigError("evaluation.logdet", "expected total or per_step");

  const long long iterations = r.integer("benchmark", "iterations", 2000);
  const long long restarts = r.integer("benchmark", "restarts", 5);
  const long long cuts = r.integer("benchmark", "log_cuts", 24);
  if (iterations < 0) throw ConfigError("benchmark.iterations", "must be nonnegative");
  if (restarts < 1) throw ConfigError("benchmark.restarts", "must be positive");
  if (cuts < 1) throw ConfigError("benchmark.log_cuts", "must be positive");

  std::string name = r.text("experiment", "name", path.stem().string());
  if (name.empty() || name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("experiment.name", "must be a nonempty file-name-safe string");
  }

  return ExperimentConfig{
      .file = path,
      .name = std::move(name),
      .seed = train.seed,
      .output = overrides.output.value_or(r.text("experiment", "output", "")),
      .system = std::move(system),
      .source = std::move(source),
      .target = std::move(target),
      .obstacles = std::move(obstacles),
      .widths = std::move(widths),
      .activation = activation,
      .budget = std::move(budget),
      .train = train,
      .eval_samples = static_cast<Eigen::Index>(eval_samples),
      .logdet = logdet == "total" ? LogdetReduction::kTotal : LogdetReduction::kPerStep,
      .benchmark_iterations = static_cast<int>(iterations),
      .benchmark_restarts = static_cast<int>(restarts),
      .benchmark_log_cuts = static_cast<int>(cuts),
  };
}

LinearGaussianProblem benchmark_problem(const ExperimentConfig& cfg) {
  const std::optional<Matrix> a = cfg.system.linear_dynamics();
  if (!a) {
    throw ConfigError("system.preset", "the affine benchmark needs linear time-invariant dynamics, got '" +
                                           cfg.system.name() + "'");
  }
  const GaussianSpec* source = cfg.source.gaussian();
  const GaussianSpec* target = cfg.target.gaussian();
  if (source == nullptr) {
    throw ConfigError("source.type", "the affine benchmark needs a Gaussian source, got " + cfg.source.kind());
  }
  if (target == nullptr) {
    throw ConfigError("target.type", "the affine benchmark needs a Gaussian target, got " + cfg.target.kind());
  }
  if (!cfg.obstacles.empty()) throw ConfigError("obstacles", "the affine benchmark has no state cost");
  return LinearGaussianProblem{*a, cfg.system.input_matrix(0), cfg.system.horizon(), *source, *target,
                               cfg.train.lambda};
}

}  // namespace dsteer

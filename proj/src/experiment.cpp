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

#include "dsteer/experiment.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "dsteer/errors.hpp"

namespace dsteer {

namespace fs = std::filesystem;

fs::path output_directory(const ExperimentConfig& cfg) {
  if (!cfg.output.empty()) return cfg.output;
  const char* root = std::getenv("DSTEER_OUT_ROOT");
  return fs::path(root != nullptr && *root != '\0' ? root : "runs") / cfg.name;
}

RunLock::RunLock(const fs::path& dir) : file_(dir / ".lock") {
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw ContractError("run directory '" + dir.string() + "' is in use by another run (stale? remove " +
                          file_.string() + ")");
    }
    throw ContractError("cannot create lock file " + file_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void write_manifest(const fs::path& dir, const std::vector<fs::path>& files) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const fs::path& f : files) {
    entries.push_back({{"path", f.generic_string()},
                       {"bytes", fs::file_size(dir / f)},
                       {"sha256", sha256_file(dir / f)}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ContractError("cannot write manifest in " + dir.string());
  out << nlohmann::ordered_json{{"format", "dsteer-manifest"}, {"version", 1}, {"files", entries}}.dump(2) << "\n";
}

BenchmarkArtifacts run_benchmark(const ExperimentConfig& cfg, const fs::path& dir) {
  const LinearGaussianProblem problem = benchmark_problem(cfg);
  fs::create_directories(dir);
  BenchmarkArtifacts out;
  out.solution = optimize_affine(problem, cfg.benchmark_iterations, cfg.benchmark_restarts, cfg.seed);
  write_benchmark_csv((dir / "benchmark.csv").string(), cfg.name, out.solution.cost);
  {
    std::ofstream sdpa(dir / "problem.dat-s");
    if (!sdpa) throw ContractError("cannot write " + (dir / "problem.dat-s").string());
    sdpa << to_sdpa(export_sdp(problem, cfg.benchmark_log_cuts));
  }
  out.files = {"benchmark.csv", "problem.dat-s"};
  return out;
}

namespace {

/// Copies sample files referenced by relative paths so the run directory reloads on its own.
std::vector<fs::path> copy_sample_files(const ExperimentConfig& cfg, const fs::path& dir) {
  std::vector<fs::path> copied;
  const fs::path base = fs::absolute(cfg.file).parent_path();
  for (const Distribution* d : {&cfg.source, &cfg.target}) {
    const auto* set = std::get_if<EmpiricalSet>(&d->variant());
    if (set == nullptr) continue;
    const fs::path rel = fs::relative(fs::absolute(set->source()), base);
    if (rel.empty() || *rel.begin() == "..") continue;
    fs::create_directories((dir / rel).parent_path());
    fs::copy_file(set->source(), dir / rel, fs::copy_options::overwrite_existing);
    copied.push_back(rel);
  }
  return copied;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  RunArtifacts art;
  art.dir = output_directory(cfg);
  fs::create_directories(art.dir);
  RunLock lock(art.dir);
  const fs::path& dir = art.dir;

  fs::copy_file(cfg.file, dir / "config.cfg", fs::copy_options::overwrite_existing);
  art.files.emplace_back("config.cfg");
  for (fs::path& p : copy_sample_files(cfg, dir)) art.files.push_back(std::move(p));

  const SteeringProblem problem = cfg.problem();
  PolicyStack initial = PolicyStack::create(cfg.system.horizon(), cfg.widths, cfg.activation, cfg.budget, cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  TrainResult trained = train(problem, std::move(initial), cfg.train, progress);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  trained.policy.save((dir / "policy.ckpt").string());
  trained.log.write_csv((dir / "convergence.csv").string());
  art.files.emplace_back("policy.ckpt");
  art.files.emplace_back("convergence.csv");

  bool linear_gaussian = true;
  try {
    benchmark_problem(cfg);
  } catch (const ConfigError&) {
    linear_gaussian = false;
  }
  if (linear_gaussian) {
    BenchmarkArtifacts b = run_benchmark(cfg, dir);
    art.benchmark = b.solution.cost;
    for (fs::path& p : b.files) art.files.push_back(std::move(p));
  }

  ReportOptions opts;
  opts.eval_samples = cfg.eval_samples;
  opts.seed = cfg.seed;
  opts.reduction = cfg.logdet;
  const RolloutBatch batch = simulate(cfg.system, trained.policy, report_states(cfg.source, opts), opts.chunk);
  write_trajectories((dir / "trajectories.csv").string(), batch);
  art.files.emplace_back("trajectories.csv");
  art.metrics = score(cfg.name, batch, cfg.target, seconds, opts);
  write_metrics_csv((dir / "metrics.csv").string(), {art.metrics});
  art.files.emplace_back("metrics.csv");

  for (fs::path& p : emit_figures(dir)) art.files.push_back(std::move(p));
  write_manifest(dir, art.files);
  art.trained = std::move(trained);
  return art;
}

// ---------------------------------------------------------------------------
// Figures

namespace {

struct Extent {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// Plot area of a fixed-size SVG canvas.
class Canvas {
 public:
  Canvas(Extent e, const std::string& title, const std::string& xlabel, const std::string& ylabel,
         bool log_y = false)
      : e_(e), log_y_(log_y) {
    body_ += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        kW, kH);
    body_ += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", kW / 2,
                         title);
    body_ += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kW / 2, kH - 8, xlabel);
    body_ += fmt::format(
        "<text x=\"14\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0})\">{1}</text>\n", kH / 2,
        ylabel);
    body_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n", kL,
                         kT, kW - kL - kR, kH - kT - kB);
    for (int i = 0; i <= 4; ++i) {
      const double vx = e_.x0 + (e_.x1 - e_.x0) * i / 4.0;
      const double vy = e_.y0 + (e_.y1 - e_.y0) * i / 4.0;
      body_ += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px(vx),
                           kH - kB + 16, vx);
      body_ += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kL - 4, py(vy) + 4,
                           ytick(vy));
    }
    body_ += fmt::format("<clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>\n",
                         kL, kT, kW - kL - kR, kH - kT - kB);
    body_ += "<g clip-path=\"url(#plot)\">\n";
  }

  double px(double x) const { return kL + (x - e_.x0) / (e_.x1 - e_.x0) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - e_.y0) / (e_.y1 - e_.y0) * (kH - kT - kB); }

  void point(double x, double y, const char* color) {
    body_ += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.6\" fill=\"{}\" fill-opacity=\"0.45\"/>\n",
                         px(x), py(y), color);
  }
  void segment(double xa, double ya, double xb, double yb, const char* color, double width = 1.0) {
    body_ += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"{}\"/>\n", px(xa),
        py(ya), px(xb), py(yb), color, width);
  }
  void circle(double x, double y, double r, const char* color, bool dashed) {
    const double rx = r / (e_.x1 - e_.x0) * (kW - kL - kR);
    const double ry = r / (e_.y1 - e_.y0) * (kH - kT - kB);
    body_ += fmt::format(
        "<ellipse cx=\"{:.2f}\" cy=\"{:.2f}\" rx=\"{:.2f}\" ry=\"{:.2f}\" fill=\"none\" stroke=\"{}\"{}/>\n", px(x),
        py(y), rx, ry, color, dashed ? " stroke-dasharray=\"4 3\"" : "");
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color, bool dashed) {
    std::string d;
    for (const auto& [x, y] : pts) d += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    body_ += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n", d, color,
                         dashed ? " stroke-dasharray=\"6 4\"" : "");
  }
  void legend(int row, const char* color, const std::string& text) {
    body_ += "</g><g>\n";
    const double y = kT + 14 + 16 * row;
    body_ += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                         kW - kR - 150, y - 4, kW - kR - 130, y - 4, color);
    body_ += fmt::format("<text x=\"{}\" y=\"{:.1f}\">{}</text>\n", kW - kR - 125, y, text);
    body_ += "</g><g clip-path=\"url(#plot)\">\n";
  }

  void save(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write " + path.string());
    out << body_ << "</g>\n</svg>\n";
  }

 private:
  std::string ytick(double v) const { return log_y_ ? fmt::format("{:.3g}", std::pow(10.0, v)) : fmt::format("{:.3g}", v); }

  static constexpr int kW = 540, kH = 500, kL = 78, kR = 16, kT = 34, kB = 44;
  Extent e_;
  std::string body_;
  bool log_y_ = false;
};

/// Line segments of the level set {f = level} on a regular grid (f(i, j) at xs[i], ys[j]).
std::vector<std::array<double, 4>> contour(const Matrix& f, const std::vector<double>& xs,
                                           const std::vector<double>& ys, double level) {
  std::vector<std::array<double, 4>> segs;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const std::array<std::array<double, 3>, 4> c{{{xs[i], ys[j], f(i, j)},
                                                    {xs[i + 1], ys[j], f(i + 1, j)},
                                                    {xs[i + 1], ys[j + 1], f(i + 1, j + 1)},
                                                    {xs[i], ys[j + 1], f(i, j + 1)}}};
      std::vector<std::pair<double, double>> hits;
      for (int e = 0; e < 4; ++e) {
        const auto& a = c[e];
        const auto& b = c[(e + 1) % 4];
        if (!std::isfinite(a[2]) || !std::isfinite(b[2])) continue;
        if ((a[2] < level) != (b[2] < level)) {
          const double t = (level - a[2]) / (b[2] - a[2]);
          hits.emplace_back(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
        }
      }
      for (std::size_t h = 0; h + 1 < hits.size(); h += 2) {
        segs.push_back({hits[h].first, hits[h].second, hits[h + 1].first, hits[h + 1].second});
      }
    }
  }
  return segs;
}

/// Marginal on the first two coordinates, when the distribution has a density.
std::optional<Distribution> marginal2(const Distribution& d) {
  auto cut = [](const GaussianSpec& g) {
    return GaussianSpec(g.mean().head(2), g.covariance().topLeftCorner(2, 2));
  };
  if (const auto* g = std::get_if<GaussianSpec>(&d.variant())) return Distribution(cut(*g));
  if (const auto* m = std::get_if<GmmSpec>(&d.variant())) {
    std::vector<GaussianSpec> comps;
    for (const GaussianSpec& c : m->components()) comps.push_back(cut(c));
    return Distribution(GmmSpec(m->weights(), std::move(comps)));
  }
  return std::nullopt;
}

struct Grid {
  std::vector<double> xs, ys;
  Matrix points;  // (i * ny + j) -> (xs[i], ys[j])
};

Grid make_grid(const Extent& e, int size) {
  Grid g;
  for (int i = 0; i < size; ++i) {
    g.xs.push_back(e.x0 + (e.x1 - e.x0) * i / (size - 1));
    g.ys.push_back(e.y0 + (e.y1 - e.y0) * i / (size - 1));
  }
  g.points.resize(size * size, 2);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) g.points.row(i * size + j) << g.xs[i], g.ys[j];
  }
  return g;
}

void draw_density(Canvas& canvas, const Grid& g, const Vector& logp, const char* color) {
  const int size = static_cast<int>(g.xs.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logp.size(); ++i) {
    if (std::isfinite(logp(i))) peak = std::max(peak, logp(i));
  }
  if (!std::isfinite(peak)) return;
  Matrix f(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) f(i, j) = logp(i * size + j);
  }
  for (double frac : {0.6, 0.25, 0.05}) {
    for (const auto& s : contour(f, g.xs, g.ys, peak + std::log(frac))) canvas.segment(s[0], s[1], s[2], s[3], color);
  }
}

/// log density of the state at step k by inverting the flow back to the source (2-D, source with density).
std::optional<Vector> pushforward_logpdf(const ExperimentConfig& cfg, const PolicyStack& stack, int k,
                                         const Matrix& y) {
  if (!cfg.source.has_pdf()) return std::nullopt;
  Matrix x = y;
  Vector correction = Vector::Zero(y.rows());
  try {
    for (int j = k - 1; j >= 0; --j) {
      x = invert_step(cfg.system, stack, j, x, 1e-9, 400).x;
      correction += step(cfg.system, stack, j, x).logdet;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return Vector(cfg.source.log_pdf(x) - correction);
}

struct TrajectoryTable {
  Eigen::Index dim = 0;
  std::map<int, std::vector<std::pair<double, double>>> by_step;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

TrajectoryTable read_trajectories(const fs::path& path, const std::set<int>& steps) {
  std::ifstream in(path);
  if (!in) throw ConfigError("run_dir", "missing " + path.string());
  std::string line;
  std::getline(in, line);
  const std::vector<std::string> header = split_csv(line);
  TrajectoryTable t;
  for (const std::string& h : header) t.dim += h.rfind("x_", 0) == 0 ? 1 : 0;
  if (header.size() < 3 || header[0] != "sample_id" || t.dim == 0) {
    throw ConfigError("run_dir", "malformed trajectory header in " + path.string());
  }
  while (std::getline(in, line)) {
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() < 3) continue;
    const int k = std::stoi(cells[1]);
    if (!steps.contains(k)) continue;
    const double x = std::stod(cells[2]);
    const double y = t.dim > 1 ? std::stod(cells[3]) : 0.0;
    t.by_step[k].emplace_back(x, y);
  }
  return t;
}

Extent pad(Extent e, double frac) {
  const double dx = std::max(e.x1 - e.x0, 1e-6) * frac, dy = std::max(e.y1 - e.y0, 1e-6) * frac;
  return {e.x0 - dx, e.x1 + dx, e.y0 - dy, e.y1 + dy};
}

fs::path convergence_figure(const fs::path& run_dir, const ExperimentConfig& cfg) {
  std::ifstream in(run_dir / "convergence.csv");
  if (!in) throw ConfigError("run_dir", "missing " + (run_dir / "convergence.csv").string());
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> cost;
  while (std::getline(in, line)) {
    const std::vector<std::string> c = split_csv(line);
    if (c.size() < 7) continue;
    const double value = std::stod(c[1]) + std::stod(c[2]) + cfg.train.lambda * std::stod(c[5]);
    cost.emplace_back(std::stod(c[0]), value);
  }
  std::optional<double> bench;
  if (std::ifstream b(run_dir / "benchmark.csv"); b) {
    std::getline(b, line);
    if (std::getline(b, line)) bench = std::stod(split_csv(line).at(1));
  }
  bool log_y = true;
  for (const auto& [s, v] : cost) log_y = log_y && v > 0.0;
  if (bench) log_y = log_y && *bench > 0.0;
  auto tr = [&](double v) { return log_y ? std::log10(v) : v; };
  Extent e{0.0, 1.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& [s, v] : cost) {
    e.x1 = std::max(e.x1, s);
    e.y0 = std::min(e.y0, tr(v));
    e.y1 = std::max(e.y1, tr(v));
  }
  if (bench) {
    e.y0 = std::min(e.y0, tr(*bench));
    e.y1 = std::max(e.y1, tr(*bench));
  }
  if (!std::isfinite(e.y0)) e = {0.0, 1.0, 0.0, 1.0};
  const double dy = std::max(e.y1 - e.y0, 1e-6) * 0.05;
  e.y0 -= dy;
  e.y1 += dy;
  Canvas canvas(e, cfg.name + ": convergence", "training step", log_y ? "cost (log scale)" : "cost", log_y);
  std::vector<std::pair<double, double>> pts;
  for (const auto& [s, v] : cost) pts.emplace_back(s, tr(v));
  canvas.polyline(pts, "#1f77b4", false);
  canvas.legend(0, "#1f77b4", "held-out cost");
  if (bench) {
    canvas.polyline({{e.x0, tr(*bench)}, {e.x1, tr(*bench)}}, "#d62728", true);
    canvas.legend(1, "#d62728", fmt::format("affine optimum {:.6g}", *bench));
  }
  const fs::path rel = fs::path("figures") / "convergence.svg";
  canvas.save(run_dir / rel);
  return rel;
}

}  // namespace

std::vector<fs::path> emit_figures(const fs::path& run_dir) {
  const fs::path cfg_path = run_dir / "config.cfg";
  if (!fs::exists(cfg_path)) throw ConfigError("run_dir", "missing " + cfg_path.string());
  if (!fs::exists(run_dir / "convergence.csv")) {
    throw ConfigError("run_dir", "missing " + (run_dir / "convergence.csv").string());
  }
  const ExperimentConfig cfg = load_experiment(cfg_path);
  const int horizon = cfg.system.horizon();
  std::set<int> steps{0, horizon / 4, horizon / 2, 3 * horizon / 4, horizon};
  const TrajectoryTable traj = read_trajectories(run_dir / "trajectories.csv", steps);
  std::optional<PolicyStack> stack;
  if (fs::exists(run_dir / "policy.ckpt")) stack = PolicyStack::load((run_dir / "policy.ckpt").string());

  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& [k, pts] : traj.by_step) {
    for (const auto& [x, y] : pts) {
      e = {std::min(e.x0, x), std::max(e.x1, x), std::min(e.y0, y), std::max(e.y1, y)};
    }
  }
  if (!std::isfinite(e.x0)) throw ConfigError("run_dir", "no trajectory rows to plot");
  e = pad(e, 0.06);

  fs::create_directories(run_dir / "figures");
  std::vector<fs::path> out;
  const bool planar = traj.dim == 2;
  const std::optional<Distribution> target2 = traj.dim >= 2 ? marginal2(cfg.target) : std::nullopt;
  const Grid grid = make_grid(e, 64);
  for (int k : steps) {
    Canvas canvas(e, fmt::format("{}: k = {}", cfg.name, k), "x_1", traj.dim > 1 ? "x_2" : "");
    if (!cfg.obstacles.empty() && cfg.obstacles.projector().rows() == 2 &&
        cfg.obstacles.projector()(0, 0) == 1.0 && cfg.obstacles.projector()(1, 1) == 1.0) {
      for (const Obstacle& o : cfg.obstacles.obstacles()) {
        // potential at half and a tenth of its peak
        canvas.circle(o.center(0), o.center(1), o.radius * std::sqrt(std::log(2.0)), "#444", false);
        canvas.circle(o.center(0), o.center(1), o.radius * std::sqrt(std::log(10.0)), "#444", true);
      }
    }
    if (planar && stack) {
      if (auto logp = pushforward_logpdf(cfg, *stack, k, grid.points)) draw_density(canvas, grid, *logp, "#2ca02c");
    }
    if (k == horizon && target2) draw_density(canvas, grid, target2->log_pdf(grid.points), "#d62728");
    if (const auto it = traj.by_step.find(k); it != traj.by_step.end()) {
      for (const auto& [x, y] : it->second) canvas.point(x, y, "#1f77b4");
    }
    const fs::path rel = fs::path("figures") / fmt::format("snapshot_k{:03d}.svg", k);
    canvas.save(run_dir / rel);
    out.push_back(rel);
  }
  out.push_back(convergence_figure(run_dir, cfg));
  return out;
}

}  // namespace dsteer

#include "tvtopo/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "tvtopo/errors.hpp"

namespace tvtopo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double off_diagonal_abs_sum(const Matrix& m, int row) {
  double acc = 0.0;
  for (int j = 0; j < m.cols(); ++j)
    if (j != row) acc += std::abs(m(row, j));
  return acc;
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) {
  return Rng(splitmix64(seed ^ splitmix64(stream_id)));
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t k) {
  if (k == 0) throw DimensionError("Rng::below requires k > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % k;
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % k;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

void ScenarioConfig::validate() const {
  if (n < 2) throw ConfigError("scenario.n", "must be >= 2");
  if (T < 0) throw ConfigError("scenario.T", "must be >= 0");
  if (segment_length < 1) throw ConfigError("scenario.segment_length", "must be >= 1");
  if (!(perturb_pct > -1.0)) throw ConfigError("scenario.perturb_pct", "must be > -1");
  if (!(density >= 0.0 && density <= 1.0)) throw ConfigError("scenario.density", "must lie in [0, 1]");
  if (!(margin > 0.0)) throw ConfigError("scenario.margin", "must be > 0");
  if (!(scale > 0.0)) throw ConfigError("scenario.scale", "must be > 0");
}

SymMat generate_initial_precision(int n, double density, Rng& rng, double margin, double scale) {
  if (n < 2) throw DimensionError("generate_initial_precision requires n >= 2");
  Matrix m = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = j + 1; i < n; ++i) {
      if (rng.uniform() < density) {
        const double w = -(0.5 + 0.5 * rng.uniform());
        m(i, j) = w;
        m(j, i) = w;
      }
    }
  }
  for (int i = 0; i < n; ++i) m(i, i) = off_diagonal_abs_sum(m, i) + margin;
  m *= scale;
  return SymMat(std::move(m));
}

SymMat perturb_node_at(const SymMat& s, int node, double pct, double margin) {
  const int n = s.n();
  if (node < 0 || node >= n) throw DimensionError("perturb_node_at: node index out of range");
  Matrix m = s.mat();
  for (int j = 0; j < n; ++j) {
    if (j == node) continue;
    const double w = m(node, j) * (1.0 + pct);
    m(node, j) = w;
    m(j, node) = w;
  }
  for (int i = 0; i < n; ++i) {
    const double floor = off_diagonal_abs_sum(m, i) + margin;
    if (m(i, i) < floor) m(i, i) = floor;
  }
  return SymMat(std::move(m));
}

Perturbation perturb_node(const SymMat& s, double pct, Rng& rng, double margin) {
  const int node = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.n())));
  return {perturb_node_at(s, node, pct, margin), node};
}

SignalSampler::SignalSampler(const SymMat& precision) {
  const SymMat cov = spd_inverse(precision);
  Eigen::LLT<Matrix> llt(cov.mat());
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("SignalSampler: covariance is not positive definite");
  factor_ = llt.matrixL();
}

Vector SignalSampler::operator()(Rng& rng) const {
  Vector z(factor_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return factor_.triangularView<Eigen::Lower>() * z;
}

int Scenario::segment_of(int t) const {
  if (t < 1) throw DimensionError("Scenario::segment_of: time indices start at 1");
  const int k = (t - 1) / config.segment_length;
  const int last = static_cast<int>(truths.size()) - 1;
  return k < last ? k : last;
}

std::pair<int, int> Scenario::segment_range(int k) const {
  const int first = k * config.segment_length;
  const bool is_last = k + 1 == static_cast<int>(truths.size());
  const int last = is_last ? length() : std::min(length(), first + config.segment_length);
  return {first, last};
}

namespace {

int segment_count(const ScenarioConfig& cfg) {
  if (cfg.T <= cfg.segment_length) return 1;
  return (cfg.T + cfg.segment_length - 1) / cfg.segment_length;
}

void draw_signals(Scenario& sc) {
  Rng rng = Rng::stream(sc.config.seed, kSignalStream);
  std::vector<SignalSampler> samplers;
  samplers.reserve(sc.truths.size());
  for (const auto& truth : sc.truths) samplers.emplace_back(truth);
  sc.signals.clear();
  sc.signals.reserve(static_cast<std::size_t>(sc.config.T));
  for (int t = 1; t <= sc.config.T; ++t) sc.signals.push_back(samplers[static_cast<std::size_t>(sc.segment_of(t))](rng));
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.config = cfg;
  Rng rng = Rng::stream(cfg.seed, kStructureStream);
  sc.truths.push_back(generate_initial_precision(cfg.n, cfg.density, rng, cfg.margin, cfg.scale));
  const int segments = segment_count(cfg);
  for (int k = 1; k < segments; ++k) {
    auto p = perturb_node(sc.truths.back(), cfg.perturb_pct, rng, cfg.margin * cfg.scale);
    sc.truths.push_back(std::move(p.precision));
    sc.perturbed_nodes.push_back(p.node);
    sc.change_times.push_back(k * cfg.segment_length);
  }
  draw_signals(sc);
  return sc;
}

namespace {

constexpr const char* kScenarioMagic = "tvtopo-scenario";
constexpr int kScenarioVersion = 1;

[[noreturn]] void malformed(const std::string& what) { throw ConfigError("scenario_file", what); }

std::string next_content_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return line;
  }
  return {};
}

template <class T>
std::vector<T> parse_list(const std::string& line) {
  std::istringstream ss(line);
  std::vector<T> out;
  T v;
  while (ss >> v) out.push_back(v);
  if (!ss.eof()) malformed("bad list entry: " + line);
  return out;
}

}  // namespace

void write_scenario(std::ostream& os, const Scenario& sc, bool include_signals) {
  const auto& c = sc.config;
  const auto old_precision = os.precision(17);
  os << kScenarioMagic << ' ' << kScenarioVersion << '\n';
  os << "[config]\n";
  os << "n = " << c.n << '\n';
  os << "T = " << c.T << '\n';
  os << "segment_length = " << c.segment_length << '\n';
  os << "perturb_pct = " << c.perturb_pct << '\n';
  os << "seed = " << c.seed << '\n';
  os << "density = " << c.density << '\n';
  os << "margin = " << c.margin << '\n';
  os << "scale = " << c.scale << '\n';
  os << "[change_times]\n";
  for (std::size_t i = 0; i < sc.change_times.size(); ++i) os << (i ? " " : "") << sc.change_times[i];
  os << '\n';
  os << "[perturbed_nodes]\n";
  for (std::size_t i = 0; i < sc.perturbed_nodes.size(); ++i) os << (i ? " " : "") << sc.perturbed_nodes[i];
  os << '\n';
  for (std::size_t k = 0; k < sc.truths.size(); ++k) {
    os << "[truth " << k << "]\n";
    write_matrix(os, sc.truths[k].mat());
  }
  if (include_signals) {
    os << "[signals]\n";
    for (const auto& x : sc.signals) {
      for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
      os << '\n';
    }
  }
  os.precision(old_precision);
}

Scenario read_scenario(std::istream& is) {
  Scenario sc;
  {
    std::istringstream head(next_content_line(is));
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kScenarioMagic) malformed("missing scenario header");
    if (version != kScenarioVersion) malformed("unsupported scenario version " + std::to_string(version));
  }
  if (next_content_line(is) != "[config]") malformed("expected [config]");

  std::map<std::string, std::string> kv;
  std::string line;
  for (;;) {
    line = next_content_line(is);
    if (line.empty()) malformed("truncated config block");
    if (line.front() == '[') break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) malformed("bad config line: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto take = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) malformed(std::string("missing config key ") + key);
    return it->second;
  };
  try {
    sc.config.n = std::stoi(take("n"));
    sc.config.T = std::stoi(take("T"));
    sc.config.segment_length = std::stoi(take("segment_length"));
    sc.config.perturb_pct = std::stod(take("perturb_pct"));
    sc.config.seed = std::stoull(take("seed"));
    sc.config.density = std::stod(take("density"));
    sc.config.margin = std::stod(take("margin"));
    sc.config.scale = std::stod(take("scale"));
  } catch (const std::logic_error&) {
    malformed("non-numeric config value");
  }
  sc.config.validate();

  if (line != "[change_times]") malformed("expected [change_times]");
  std::getline(is, line);
  sc.change_times = parse_list<int>(line);
  if (next_content_line(is) != "[perturbed_nodes]") malformed("expected [perturbed_nodes]");
  std::getline(is, line);
  sc.perturbed_nodes = parse_list<int>(line);

  const std::size_t segments = static_cast<std::size_t>(segment_count(sc.config));
  for (std::size_t k = 0; k < segments; ++k) {
    if (next_content_line(is) != "[truth " + std::to_string(k) + "]") malformed("expected [truth " + std::to_string(k) + "]");
    Matrix m;
    try {
      m = read_matrix(is);
    } catch (const DimensionError& e) {
      malformed(e.what());
    }
    if (m.rows() != sc.config.n) malformed("truth matrix size does not match n");
    if (m != m.transpose()) malformed("truth matrix is not symmetric");
    sc.truths.emplace_back(std::move(m));
  }

  line = next_content_line(is);
  if (line.empty()) {
    draw_signals(sc);
    return sc;
  }
  if (line != "[signals]") malformed("expected [signals]");
  sc.signals.reserve(static_cast<std::size_t>(sc.config.T));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    const auto values = parse_list<double>(line);
    if (static_cast<int>(values.size()) != sc.config.n) malformed("signal row has wrong length");
    sc.signals.push_back(Eigen::Map<const Vector>(values.data(), sc.config.n));
  }
  if (sc.length() != sc.config.T) malformed("signal count does not match T");
  return sc;
}

}  // namespace tvtopo

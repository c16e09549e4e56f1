#ifndef TVTOPO_SYNTHGEN_HPP
#define TVTOPO_SYNTHGEN_HPP

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "tvtopo/matcalc.hpp"

namespace tvtopo {

/**
 * Seedable generator with a portable output sequence.
 *
 * Built on std::mt19937_64, whose raw output is fixed by the standard.  The
 * derived draws avoid the implementation-defined std distributions:
 *   uniform()  = (next() >> 11) * 2^-53
 *   below(k)   = rejection sampling on next() for an unbiased index
 *   normal()   = Box-Muller on two uniforms, the sine branch cached
 *
 * Independent streams for the same seed are derived by `Rng::stream(seed, id)`,
 * which seeds the engine with splitmix64(seed ^ splitmix64(id)).
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next() { return engine_(); }
  double uniform();
  std::uint64_t below(std::uint64_t k);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// Stream ids used by build_scenario.
inline constexpr std::uint64_t kStructureStream = 1;
inline constexpr std::uint64_t kSignalStream = 2;

struct ScenarioConfig {
  int n = 8;
  int T = 600;
  int segment_length = 200;
  double perturb_pct = 0.2;
  std::uint64_t seed = 1;
  double density = 0.5;
  /// Diagonal dominance margin of every truth matrix, before scaling.
  double margin = 3.0;
  /// Global factor applied to the initial precision matrix.
  double scale = 0.1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Random sparse precision matrix: each off-diagonal pair is an edge with
/// probability `density`, edge weights are uniform in [-1, -0.5], and each
/// diagonal entry is its row's absolute off-diagonal sum plus `margin`.
/// The whole matrix is then multiplied by `scale`.
SymMat generate_initial_precision(int n, double density, Rng& rng, double margin = 0.1, double scale = 1.0);

/// Scales every off-diagonal entry in row/column `node` by (1 + pct), then
/// raises any diagonal entry that lost dominance back to
/// (absolute off-diagonal row sum + margin).  Other entries are untouched.
SymMat perturb_node_at(const SymMat& s, int node, double pct, double margin = 0.1);

struct Perturbation {
  SymMat precision;
  int node;
};

/// perturb_node_at on a node drawn uniformly from `rng`.
Perturbation perturb_node(const SymMat& s, double pct, Rng& rng, double margin = 0.1);

/// Draws x ~ N(0, S^{-1}) for a fixed precision S.
class SignalSampler {
 public:
  explicit SignalSampler(const SymMat& precision);
  Vector operator()(Rng& rng) const;

 private:
  Matrix factor_;  // lower Cholesky factor of S^{-1}
};

inline Vector sample_signal(const SymMat& precision, Rng& rng) { return SignalSampler(precision)(rng); }

struct Scenario {
  ScenarioConfig config;
  /// One precision matrix per stationary segment.
  std::vector<SymMat> truths;
  /// Node perturbed to produce truths[k + 1].
  std::vector<int> perturbed_nodes;
  /// Times after which the truth changes: segment_length, 2*segment_length, ...
  std::vector<int> change_times;
  /// signals[k] is the sample of time t = k + 1.
  std::vector<Vector> signals;

  int n() const { return config.n; }
  int length() const { return static_cast<int>(signals.size()); }
  /// Segment index of time t (1-based).
  int segment_of(int t) const;
  const SymMat& truth_at(int t) const { return truths[static_cast<std::size_t>(segment_of(t))]; }
  /// Half-open range [first, last) of 0-based sample indices in segment k.
  std::pair<int, int> segment_range(int k) const;
};

Scenario build_scenario(const ScenarioConfig& cfg);

/**
 * Scenario file: a line-oriented text document
 *
 *   tvtopo-scenario 1
 *   [config]
 *   key = value            (one line per ScenarioConfig field)
 *   [change_times]
 *   t1 t2 ...
 *   [perturbed_nodes]
 *   i1 i2 ...
 *   [truth k]               (one block per segment, matrix dump format)
 *   [signals]               (optional; T rows of comma-separated values)
 *
 * Numbers are written with 17 significant digits, so reading back yields
 * the exact same doubles.
 */
void write_scenario(std::ostream& os, const Scenario& scenario, bool include_signals = true);
/// Throws ConfigError on malformed input.  When the file carries no signals
/// they are regenerated from the config.
Scenario read_scenario(std::istream& is);

}  // namespace tvtopo

#endif  // TVTOPO_SYNTHGEN_HPP

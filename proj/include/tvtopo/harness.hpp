#ifndef TVTOPO_HARNESS_HPP
#define TVTOPO_HARNESS_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "tvtopo/ggm.hpp"
#include "tvtopo/matcalc.hpp"
#include "tvtopo/pc_solver.hpp"
#include "tvtopo/synthgen.hpp"

namespace tvtopo {

/// ||S_hat - S_ref||_F^2 / ||S_ref||_F^2.  Throws DivisionByZeroError for a
/// zero reference and DimensionError for mismatched sizes.
double nmse(const SymMat& s_hat, const SymMat& s_ref);

/// Batch MLE of every stationary segment: inverse of the plain sample
/// covariance of the segment's signals (ridged if singular).
std::vector<SymMat> compute_bmle(const Scenario& scenario, double ridge = kDefaultMleRidge);

/// Instantaneous MLE from the forgetting-factor covariance.
SymMat compute_imle(const StreamingCovariance& cov, double ridge = kDefaultMleRidge);

/// The NMSE series reported per time step.  Names match the CSV columns.
enum class Metric { PcBmle, CoBmle, ImleBmle, PcImle, CoImle, PcTruth, CoTruth };
inline constexpr std::array<Metric, 7> kAllMetrics = {Metric::PcBmle, Metric::CoBmle,  Metric::ImleBmle,
                                                      Metric::PcImle, Metric::CoImle,  Metric::PcTruth,
                                                      Metric::CoTruth};
std::string_view metric_name(Metric m);

struct MetricsRecord {
  int t = 0;
  std::array<std::optional<double>, kAllMetrics.size()> values{};

  std::optional<double> get(Metric m) const { return values[static_cast<std::size_t>(m)]; }
  void set(Metric m, double v) { values[static_cast<std::size_t>(m)] = v; }
};

/// Which references NMSE is computed against.
struct ReferenceSet {
  bool bmle = true;
  bool imle = true;
  bool truth = true;
};

struct ExperimentConfig {
  /// Prediction-correction settings; the correction-only baseline reuses
  /// them with P = 0.
  SolverConfig solver;
  double gamma = 0.97;
  double eps = kDefaultSpdFloor;
  double cov_ridge = kDefaultCovarianceRidge;
  double mle_ridge = kDefaultMleRidge;
  /// Initial estimate is init_scale * I.
  double init_scale = 0.1;
  ReferenceSet references;
  /// Minimum eigenvalues of the online estimates are recorded every
  /// `feasibility_stride` steps (0 disables).
  int feasibility_stride = 25;

  void validate() const;
};

struct FeasibilitySample {
  int t;
  double min_eig_pc;
  double min_eig_co;
};

struct ExperimentResult {
  std::vector<MetricsRecord> records;
  std::vector<FeasibilitySample> feasibility;
  std::vector<SymMat> bmle;
  SymMat final_pc;
  SymMat final_co;
};

/**
 * Streams the scenario once through a prediction-correction tracker and a
 * correction-only tracker and records the NMSE of each against the selected
 * references at every time step t = 1..T.
 *
 * The first sample is absorbed before any prediction (there is no cost at
 * t = 0 to predict from), so the estimate at t = 1 is the initial point
 * after C correction steps.  Solver divergence is rethrown as
 * DivergenceError carrying the time index.
 */
ExperimentResult run_experiment(const Scenario& scenario, const ExperimentConfig& cfg);

/// Per-sample series of one metric, index t - 1.  Absent values are NaN.
std::vector<double> metric_series(const std::vector<MetricsRecord>& records, Metric m);

/// Mean of `series` over the second half of every stationary segment.
std::vector<double> second_half_means(const std::vector<double>& series, const Scenario& scenario);

/// True when series(t_change + 1) > series(t_change - 1) (t is 1-based).
bool rises_across(const std::vector<double>& series, int t_change);

struct SpikeReport {
  Metric metric;
  int change_time;
  bool rises;
};

/// rises_across for every present metric at every change time.
std::vector<SpikeReport> detect_spikes(const std::vector<MetricsRecord>& records, const Scenario& scenario);

/// CSV header shared by every per-seed metrics file.
std::string_view metrics_csv_header();
/// One row per record, prefixed by the seed; absent metrics are empty cells.
void write_metrics_csv(std::ostream& os, std::uint64_t seed, const std::vector<MetricsRecord>& records,
                       bool with_header = true);

/// Plot data across seeds: t, then mean and median of every metric.
void write_aggregate_csv(std::ostream& os, const std::vector<std::vector<MetricsRecord>>& runs);

struct StationaryTrack {
  SymMat estimate;
  SymMat imle;
  std::vector<double> nmse_vs_imle;
};

/// Tracks the MLE of a frozen covariance for `steps` ticks, starting at
/// init_scale * I.
StationaryTrack track_stationary(const SymMat& sigma_hat, const SolverConfig& cfg, int steps,
                                 double eps = kDefaultSpdFloor, double init_scale = 1.0);

}  // namespace tvtopo

#endif  // TVTOPO_HARNESS_HPP

#include "tvtopo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "tvtopo/errors.hpp"

namespace tvtopo {

double nmse(const SymMat& s_hat, const SymMat& s_ref) {
  if (s_hat.n() != s_ref.n()) throw DimensionError("nmse: matrices differ in size");
  const double denom = s_ref.mat().squaredNorm();
  if (denom == 0.0) throw DivisionByZeroError("nmse: reference matrix is zero");
  return (s_hat.mat() - s_ref.mat()).squaredNorm() / denom;
}

std::vector<SymMat> compute_bmle(const Scenario& scenario, double ridge) {
  std::vector<SymMat> out;
  out.reserve(scenario.truths.size());
  for (std::size_t k = 0; k < scenario.truths.size(); ++k) {
    const auto [first, last] = scenario.segment_range(static_cast<int>(k));
    if (last <= first) {
      std::ostringstream msg;
      msg << "compute_bmle: segment " << k << " has no samples";
      throw EmptyInputError(msg.str());
    }
    const std::span<const Vector> seg(scenario.signals.data() + first, static_cast<std::size_t>(last - first));
    out.push_back(mle_closed_form_ridged(batch_covariance(seg), ridge).precision);
  }
  return out;
}

SymMat compute_imle(const StreamingCovariance& cov, double ridge) {
  return mle_closed_form_ridged(cov.current(), ridge).precision;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::PcBmle: return "nmse_pc_bmle";
    case Metric::CoBmle: return "nmse_co_bmle";
    case Metric::ImleBmle: return "nmse_imle_bmle";
    case Metric::PcImle: return "nmse_pc_imle";
    case Metric::CoImle: return "nmse_co_imle";
    case Metric::PcTruth: return "nmse_pc_truth";
    case Metric::CoTruth: return "nmse_co_truth";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  solver.validate();
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("solver.gamma", "must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("solver.eps", "must be > 0");
  if (!(cov_ridge >= 0.0)) throw ConfigError("solver.cov_ridge", "must be >= 0");
  if (!(mle_ridge > 0.0)) throw ConfigError("solver.mle_ridge", "must be > 0");
  if (!(init_scale > 0.0)) throw ConfigError("solver.init_scale", "must be > 0");
  if (feasibility_stride < 0) throw ConfigError("run.feasibility_stride", "must be >= 0");
}

namespace {

double checked_nmse(const SymMat& s_hat, const SymMat& s_ref, int t) {
  const double v = nmse(s_hat, s_ref);
  if (!std::isfinite(v)) throw DivergenceError("nmse became non-finite at time " + std::to_string(t), t);
  return v;
}

}  // namespace

ExperimentResult run_experiment(const Scenario& scenario, const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = scenario.n();
  ExperimentResult result;
  result.final_pc = SymMat::diagonal(Vector::Constant(n, cfg.init_scale));
  result.final_co = result.final_pc;
  if (scenario.length() == 0) return result;

  const ReferenceSet& refs = cfg.references;
  if (refs.bmle) result.bmle = compute_bmle(scenario, cfg.mle_ridge);

  SolverConfig pc_cfg = cfg.solver;
  SolverConfig co_cfg = cfg.solver;
  co_cfg.P = 0;

  const StreamingCovariance fresh(n, cfg.gamma, cfg.cov_ridge);
  GgmProblem pc_problem(fresh, cfg.eps);
  GgmProblem co_problem(fresh, cfg.eps);
  const VechVec init = pc_problem.project(vech(result.final_pc));
  SolverState pc{init, 0};
  SolverState co{init, 0};

  result.records.reserve(static_cast<std::size_t>(scenario.length()));
  for (int t = 1; t <= scenario.length(); ++t) {
    const Vector& x = scenario.signals[static_cast<std::size_t>(t - 1)];
    if (t == 1) {
      pc_problem.advance(x);
      co_problem.advance(x);
      pc = SolverState{correct(pc.estimate, pc_problem, pc_cfg, 1), 1};
      co = SolverState{correct(co.estimate, co_problem, co_cfg, 1), 1};
    } else {
      pc = step(pc, pc_problem, x, pc_cfg);
      co = step(co, co_problem, x, co_cfg);
    }

    const SymMat s_pc = unvech(pc.estimate);
    const SymMat s_co = unvech(co.estimate);
    MetricsRecord rec;
    rec.t = t;
    const std::size_t seg = static_cast<std::size_t>(scenario.segment_of(t));
    std::optional<SymMat> imle;
    if (refs.imle) {
      imle = compute_imle(pc_problem.covariance(), cfg.mle_ridge);
      rec.set(Metric::PcImle, checked_nmse(s_pc, *imle, t));
      rec.set(Metric::CoImle, checked_nmse(s_co, *imle, t));
    }
    if (refs.bmle) {
      const SymMat& b = result.bmle[seg];
      rec.set(Metric::PcBmle, checked_nmse(s_pc, b, t));
      rec.set(Metric::CoBmle, checked_nmse(s_co, b, t));
      if (imle) rec.set(Metric::ImleBmle, checked_nmse(*imle, b, t));
    }
    if (refs.truth) {
      const SymMat& truth = scenario.truths[seg];
      rec.set(Metric::PcTruth, checked_nmse(s_pc, truth, t));
      rec.set(Metric::CoTruth, checked_nmse(s_co, truth, t));
    }
    result.records.push_back(rec);

    if (cfg.feasibility_stride > 0 && t % cfg.feasibility_stride == 0)
      result.feasibility.push_back({t, min_eigenvalue(s_pc), min_eigenvalue(s_co)});
  }
  result.final_pc = unvech(pc.estimate);
  result.final_co = unvech(co.estimate);
  return result;
}

std::vector<double> metric_series(const std::vector<MetricsRecord>& records, Metric m) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.get(m).value_or(std::numeric_limits<double>::quiet_NaN()));
  return out;
}

std::vector<double> second_half_means(const std::vector<double>& series, const Scenario& scenario) {
  std::vector<double> out;
  for (std::size_t k = 0; k < scenario.truths.size(); ++k) {
    auto [first, last] = scenario.segment_range(static_cast<int>(k));
    last = std::min<int>(last, static_cast<int>(series.size()));
    const int mid = first + (last - first) / 2;
    if (last <= mid) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double acc = 0.0;
    for (int i = mid; i < last; ++i) acc += series[static_cast<std::size_t>(i)];
    out.push_back(acc / (last - mid));
  }
  return out;
}

bool rises_across(const std::vector<double>& series, int t_change) {
  // 1-based t_change + 1 and t_change - 1 live at 0-based t_change and t_change - 2.
  if (t_change < 2 || t_change >= static_cast<int>(series.size())) return false;
  return series[static_cast<std::size_t>(t_change)] > series[static_cast<std::size_t>(t_change - 2)];
}

std::vector<SpikeReport> detect_spikes(const std::vector<MetricsRecord>& records, const Scenario& scenario) {
  std::vector<SpikeReport> out;
  if (records.empty()) return out;
  for (Metric m : kAllMetrics) {
    if (!records.front().get(m)) continue;
    const auto series = metric_series(records, m);
    for (int tc : scenario.change_times) out.push_back({m, tc, rises_across(series, tc)});
  }
  return out;
}

namespace {

void put_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  os << buf;
}

}  // namespace

std::string_view metrics_csv_header() {
  return "seed,t,nmse_pc_bmle,nmse_co_bmle,nmse_imle_bmle,nmse_pc_imle,nmse_co_imle,nmse_pc_truth,nmse_co_truth";
}

void write_metrics_csv(std::ostream& os, std::uint64_t seed, const std::vector<MetricsRecord>& records,
                       bool with_header) {
  if (with_header) os << metrics_csv_header() << '\n';
  for (const auto& r : records) {
    os << seed << ',' << r.t;
    for (Metric m : kAllMetrics) {
      os << ',';
      if (auto v = r.get(m)) put_number(os, *v);
    }
    os << '\n';
  }
}

void write_aggregate_csv(std::ostream& os, const std::vector<std::vector<MetricsRecord>>& runs) {
  os << 't';
  for (Metric m : kAllMetrics) os << ",mean_" << metric_name(m) << ",median_" << metric_name(m);
  os << '\n';
  std::size_t length = 0;
  for (const auto& r : runs) length = std::max(length, r.size());
  std::vector<double> column;
  for (std::size_t i = 0; i < length; ++i) {
    os << i + 1;
    for (Metric m : kAllMetrics) {
      column.clear();
      for (const auto& r : runs)
        if (i < r.size())
          if (auto v = r[i].get(m)) column.push_back(*v);
      if (column.empty()) {
        os << ",,";
        continue;
      }
      double mean = 0.0;
      for (double v : column) mean += v;
      mean /= static_cast<double>(column.size());
      std::sort(column.begin(), column.end());
      const std::size_t h = column.size() / 2;
      const double median = column.size() % 2 ? column[h] : 0.5 * (column[h - 1] + column[h]);
      os << ',';
      put_number(os, mean);
      os << ',';
      put_number(os, median);
    }
    os << '\n';
  }
}

StationaryTrack track_stationary(const SymMat& sigma_hat, const SolverConfig& cfg, int steps, double eps,
                                 double init_scale) {
  cfg.validate();
  StationaryGgmProblem problem(sigma_hat, eps);
  StationaryTrack out{SymMat::diagonal(Vector::Constant(sigma_hat.n(), init_scale)),
                      mle_closed_form_ridged(sigma_hat).precision, {}};
  SolverState state{problem.project(vech(out.estimate)), 0};
  out.nmse_vs_imle.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  for (int k = 0; k < steps; ++k) {
    state = step(state, problem, StationaryGgmProblem::Tick{}, cfg);
    out.nmse_vs_imle.push_back(nmse(unvech(state.estimate), out.imle));
  }
  out.estimate = unvech(state.estimate);
  return out;
}

}  // namespace tvtopo

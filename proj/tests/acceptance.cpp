// Acceptance checks.  Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.  Tolerances and seed sets are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "tvtopo/cli.hpp"
#include "tvtopo/ggm.hpp"
#include "tvtopo/harness.hpp"
#include "tvtopo/matcalc.hpp"

using namespace tvtopo;
namespace fs = std::filesystem;

namespace {

constexpr double kGradRelTol = 1e-6;
constexpr double kHvpRelTol = 1e-5;
constexpr double kDerivSeconds = 10.0;
constexpr double kOperatorAbsTol = 1e-10;
constexpr double kMleRelTol = 1e-4;
constexpr double kMleSeconds = 30.0;
constexpr int kTrackingSeeds = 10;
constexpr int kTrackingRequired = 8;
constexpr double kTrackingSeconds = 60.0;
constexpr double kReconvergeRatio = 0.5;
constexpr int kLargeSeeds = 3;
constexpr double kLargeSeconds = 300.0;
constexpr int kFeasibilityStride = 25;
constexpr double kStationaryTol = 1e-6;
constexpr int kStationarySteps = 500;
constexpr int kStationaryC = 20;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %d %-24s %s  %s\n", id, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void derivatives() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  double worst_grad = 0, worst_hvp = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 5;
    const Matrix s = oracle::random_spd(n, gen);
    const Matrix sigma = oracle::random_spd(n, gen);
    const SymMat sigma_sym(sigma);
    const auto cost = [&](const Matrix& m) { return ggm_cost(SymMat(m), sigma_sym); };
    const Vector fd = oracle::fd_gradient(cost, s, 1e-5);
    worst_grad = std::max(worst_grad, oracle::rel_err(ggm_gradient(SymMat(s), sigma_sym).values(), fd));

    const Vector dir = oracle::half_vec(oracle::random_symmetric(n, gen));
    const Vector v = oracle::half_vec(s);
    const double h = 1e-5;
    const Vector fd_h = (ggm_gradient(SymMat(oracle::from_half_vec(v + h * dir, n)), sigma_sym).values() -
                         ggm_gradient(SymMat(oracle::from_half_vec(v - h * dir, n)), sigma_sym).values()) /
                        (2 * h);
    worst_hvp = std::max(worst_hvp, oracle::rel_err(ggm_hessian_apply(SymMat(s), VechVec(n, dir)).values(), fd_h));
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_grad < kGradRelTol && worst_hvp < kHvpRelTol && secs < kDerivSeconds;
  report(1, "derivatives", pass,
         fmt("grad_rel=%.2e", worst_grad) + fmt(" hvp_rel=%.2e", worst_hvp) + fmt(" time=%.2fs", secs));
}

void operators() {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> g;
  double worst_d = 0, worst_h = 0;
  for (int n = 1; n <= 6; ++n) {
    const Matrix d = oracle::duplication(n);
    for (int trial = 0; trial < 10; ++trial) {
      Matrix m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = g(gen);
      const Vector want_d = d.transpose() * oracle::vec(m);
      worst_d = std::max(worst_d, (dup_transpose_apply(m).values() - want_d).cwiseAbs().maxCoeff());

      const Matrix s = oracle::random_spd(n, gen);
      const Vector dir = oracle::half_vec(oracle::random_symmetric(n, gen));
      const Vector want_h = d.transpose() * oracle::kron(s, s).inverse() * d * dir;
      const Vector got_h = hessian_apply(spd_inverse(SymMat(s)), VechVec(n, dir)).values();
      worst_h = std::max(worst_h, (got_h - want_h).cwiseAbs().maxCoeff());
    }
  }
  report(2, "operator_oracles", worst_d < kOperatorAbsTol && worst_h < kOperatorAbsTol,
         fmt("dup_abs=%.2e", worst_d) + fmt(" hess_abs=%.2e", worst_h));
}

void mle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(99);
  double worst = 0;
  bool all_converged = true;
  for (int k = 0; k < 20; ++k) {
    const SymMat sigma(oracle::random_spd(8, gen));
    const IterativeMle it = mle_iterative(sigma, IterativeMleOptions{});
    all_converged = all_converged && it.converged;
    worst = std::max(worst, oracle::rel_err(it.precision.mat(), mle_closed_form(sigma).mat()));
  }
  const double secs = seconds_since(t0);
  report(3, "mle_equivalence", worst < kMleRelTol && all_converged && secs < kMleSeconds,
         fmt("rel_frob=%.2e", worst) + " converged=" + (all_converged ? "yes" : "no") + fmt(" time=%.2fs", secs));
}

struct FeasibilityLog {
  double min_eig = std::numeric_limits<double>::infinity();
  int samples = 0;
  void add(const ExperimentResult& r) {
    for (const auto& f : r.feasibility) {
      min_eig = std::min({min_eig, f.min_eig_pc, f.min_eig_co});
      ++samples;
    }
  }
};

double at(const std::vector<double>& series, int t) { return series[static_cast<std::size_t>(t - 1)]; }

void tracking(FeasibilityLog& feas) {
  const auto t0 = Clock::now();
  int a_ok = 0, b_ok = 0, c_ok = 0, all_ok = 0, spike_ok = 0, reconv_ok = 0, fig_b_ok = 0;
  for (int seed = 1; seed <= kTrackingSeeds; ++seed) {
    ScenarioConfig sc;
    sc.seed = static_cast<std::uint64_t>(seed);
    const Scenario scenario = build_scenario(sc);
    ExperimentConfig ec;
    ec.feasibility_stride = kFeasibilityStride;
    const ExperimentResult res = run_experiment(scenario, ec);
    feas.add(res);

    bool a = true, b = true;
    for (Metric m : {Metric::PcBmle, Metric::CoBmle, Metric::ImleBmle}) {
      const auto s = metric_series(res.records, m);
      for (int tc : scenario.change_times) a = a && at(s, tc + 1) > at(s, tc - 1);
      for (int k = 0; k < static_cast<int>(scenario.truths.size()); ++k) {
        const auto [first, last] = scenario.segment_range(k);
        b = b && at(s, last) < at(s, first + 10);
      }
    }
    const auto pc_means = second_half_means(metric_series(res.records, Metric::PcBmle), scenario);
    const auto co_means = second_half_means(metric_series(res.records, Metric::CoBmle), scenario);
    bool c = true;
    for (std::size_t k = 0; k < pc_means.size(); ++k) c = c && pc_means[k] <= co_means[k];
    a_ok += a;
    b_ok += b;
    c_ok += c;
    all_ok += a && b && c;

    bool spike = true, reconv = true;
    for (Metric m : {Metric::PcImle, Metric::CoImle}) {
      const auto s = metric_series(res.records, m);
      for (int tc : scenario.change_times) spike = spike && at(s, tc + 1) > at(s, tc - 1);
      for (int k = 0; k < static_cast<int>(scenario.truths.size()); ++k) {
        const auto [first, last] = scenario.segment_range(k);
        double peak = 0;
        for (int t = first + 1; t <= last; ++t) peak = std::max(peak, at(s, t));
        reconv = reconv && at(s, last) <= kReconvergeRatio * peak;
      }
    }
    spike_ok += spike;
    reconv_ok += reconv;
    fig_b_ok += spike && reconv;
  }
  const double secs = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof detail, "seeds_passing=%d/%d (a=%d b=%d c=%d) time=%.2fs", all_ok, kTrackingSeeds,
                a_ok, b_ok, c_ok, secs);
  report(4, "bmle_tracking", all_ok >= kTrackingRequired && secs < kTrackingSeconds, detail);
  std::snprintf(detail, sizeof detail, "seeds_passing=%d/%d (spike=%d reconverge=%d)", fig_b_ok, kTrackingSeeds,
                spike_ok, reconv_ok);
  report(5, "imle_following", fig_b_ok >= kTrackingRequired, detail);
}

void large_network(FeasibilityLog& feas) {
  bool pass = true;
  double slowest = 0;
  int ok = 0;
  for (int seed = 1; seed <= kLargeSeeds; ++seed) {
    const auto t0 = Clock::now();
    ScenarioConfig sc;
    sc.n = 128;
    sc.perturb_pct = 0.5;
    sc.seed = static_cast<std::uint64_t>(seed);
    const Scenario scenario = build_scenario(sc);
    ExperimentConfig ec;
    ec.references = {false, false, true};
    ec.feasibility_stride = kFeasibilityStride;
    const ExperimentResult res = run_experiment(scenario, ec);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    feas.add(res);

    bool run_ok = secs < kLargeSeconds;
    for (Metric m : {Metric::PcTruth, Metric::CoTruth}) {
      const auto s = metric_series(res.records, m);
      for (double v : s) run_ok = run_ok && std::isfinite(v);
      for (int k = 0; k < static_cast<int>(scenario.truths.size()); ++k) {
        const auto [first, last] = scenario.segment_range(k);
        run_ok = run_ok && at(s, last) < at(s, first + 10);
      }
    }
    ok += run_ok;
    pass = pass && run_ok;
  }
  char detail[128];
  std::snprintf(detail, sizeof detail, "runs_passing=%d/%d slowest=%.2fs", ok, kLargeSeeds, slowest);
  report(6, "large_network", pass, detail);
}

void feasibility(const FeasibilityLog& feas) {
  char detail[128];
  std::snprintf(detail, sizeof detail, "min_eig=%.4e over %d samples (eps=%.0e)", feas.min_eig, feas.samples,
                kDefaultSpdFloor);
  report(7, "feasibility", feas.samples > 0 && feas.min_eig >= kDefaultSpdFloor, detail);
}

void stationary() {
  double worst = 0;
  for (int seed = 1; seed <= kTrackingSeeds; ++seed) {
    ScenarioConfig sc;
    sc.seed = static_cast<std::uint64_t>(seed);
    const Scenario scenario = build_scenario(sc);
    // Freeze the forgetting-factor covariance reached at the end of the first segment.
    StreamingCovariance cov(sc.n, 0.97);
    for (int t = 0; t < sc.segment_length; ++t) cov = cov.updated(scenario.signals[static_cast<std::size_t>(t)]);
    SolverConfig cfg;
    cfg.C = kStationaryC;
    ExperimentConfig defaults;
    const StationaryTrack tr =
        track_stationary(cov.current(), cfg, kStationarySteps, defaults.eps, defaults.init_scale);
    worst = std::max(worst, tr.nmse_vs_imle.back());
  }
  report(8, "stationary_fixed_point", worst < kStationaryTol, fmt("worst_nmse_pc_imle=%.3e", worst));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / ("tvtopo_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  bool same = true;
  int compared = 0;
  std::string why;
  for (const char* dir : {"first", "second"}) {
    const std::string out = (root / dir).string();
    const char* argv[] = {"tvtopo", "run", "--seed", "1", "--out", out.c_str()};
    std::ostringstream o, e;
    const int code = run_cli(6, argv, o, e);
    if (code != 0) {
      same = false;
      why = " run exited " + std::to_string(code);
    }
  }
  if (same) {
    for (const char* f : {"metrics_seed1.csv", "aggregate.csv"}) {
      const std::string a = slurp(root / "first" / f);
      const std::string b = slurp(root / "second" / f);
      same = same && !a.empty() && a == b;
      ++compared;
    }
  }
  fs::remove_all(root);
  report(9, "determinism", same, "files_compared=" + std::to_string(compared) + why);
}

}  // namespace

int main() {
  derivatives();
  operators();
  mle_equivalence();
  FeasibilityLog feas;
  tracking(feas);
  large_network(feas);
  feasibility(feas);
  stationary();
  determinism();
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}

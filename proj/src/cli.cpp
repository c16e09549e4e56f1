#include "tvtopo/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "tvtopo/config.hpp"
#include "tvtopo/errors.hpp"
#include "tvtopo/harness.hpp"
#include "tvtopo/synthgen.hpp"

namespace tvtopo {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) {
      fs::remove(tmp, ec);
      throw IoError("write to " + tmp.string() + " failed");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags, const char* out_help) {
  cmd->add_option("--config", flags.config, "Config file");
  cmd->add_option("--seed", flags.seed, "Single seed, replacing run.seeds");
  cmd->add_option("--out", flags.out, out_help);
  cmd->add_option("--set", flags.sets, "Override, section.key=value (repeatable)")->allow_extra_args(false);
}

RunConfig effective_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config.empty() ? RunConfig{} : load_config(flags.config);
  for (const auto& s : flags.sets) apply_override(cfg, s);
  if (flags.seed) cfg.run.seeds = {*flags.seed};
  cfg.validate();
  if (cfg.run.seeds.empty()) throw ConfigError("run.seeds", "must list at least one seed");
  return cfg;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

/// Calls fn(i) for i in [0, count) on up to `jobs` threads.  fn must not throw.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

ScenarioConfig scenario_for(const RunConfig& cfg, std::uint64_t seed) {
  ScenarioConfig sc = cfg.scenario;
  sc.seed = seed;
  return sc;
}

std::vector<Scenario> build_scenarios(const RunConfig& cfg, int jobs) {
  std::vector<Scenario> out(cfg.run.seeds.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = build_scenario(scenario_for(cfg, cfg.run.seeds[i])); });
  return out;
}

struct SeedOutcome {
  ExperimentResult result;
  std::exception_ptr error;
};

std::vector<SeedOutcome> run_seeds(const std::vector<Scenario>& scenarios, const ExperimentConfig& cfg, int jobs) {
  std::vector<SeedOutcome> out(scenarios.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    try {
      out[i].result = run_experiment(scenarios[i], cfg);
    } catch (...) {
      out[i].error = std::current_exception();
    }
  });
  return out;
}

std::vector<double> mean_series(const std::vector<SeedOutcome>& runs, Metric m) {
  std::vector<double> acc;
  for (const auto& r : runs) {
    const auto s = metric_series(r.result.records, m);
    if (acc.empty()) acc.assign(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size() && i < acc.size(); ++i) acc[i] += s[i];
  }
  for (double& v : acc) v /= static_cast<double>(runs.size());
  return acc;
}

/// Mean over segments of the second-half segment means.
double steady_state(const std::vector<double>& series, const Scenario& scenario) {
  const auto means = second_half_means(series, scenario);
  if (means.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (double v : means) acc += v;
  return acc / static_cast<double>(means.size());
}

bool has_metric(const std::vector<MetricsRecord>& records, Metric m) {
  return !records.empty() && records.front().get(m).has_value();
}

int cmd_generate(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = effective_config(flags);
  const std::uint64_t seed = cfg.run.seeds.front();
  const Scenario sc = build_scenario(scenario_for(cfg, seed));
  const fs::path path =
      flags.out.empty() ? fs::path(cfg.run.out) / ("scenario_seed" + std::to_string(seed) + ".txt") : fs::path(flags.out);

  std::ostringstream os;
  write_scenario(os, sc);
  write_file_atomic(path, os.str());

  bool all_spd = true;
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& s : sc.truths) {
    all_spd = all_spd && is_spd(s);
    min_eig = std::min(min_eig, min_eigenvalue(s));
  }
  out << "command=generate\n"
      << "out=" << path.string() << '\n'
      << "seed=" << seed << '\n'
      << "n=" << sc.n() << '\n'
      << "T=" << sc.length() << '\n'
      << "change_times=" << join(sc.change_times) << '\n'
      << "perturbed_nodes=" << join(sc.perturbed_nodes) << '\n'
      << "truths=" << sc.truths.size() << '\n'
      << "spd_verified=" << (all_spd ? "true" : "false") << '\n'
      << "min_truth_eigenvalue=" << fmt(min_eig) << '\n';
  return all_spd ? kExitOk : kExitInternal;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open scenario file " + path);
  return read_scenario(is);
}

int cmd_run(const CommonFlags& flags, const std::string& scenario_path, int jobs, std::ostream& out) {
  RunConfig cfg = effective_config(flags);
  std::vector<Scenario> scenarios;
  if (!scenario_path.empty()) {
    scenarios.push_back(load_scenario_file(scenario_path));
    cfg.scenario = scenarios.front().config;
    cfg.run.seeds = {scenarios.front().config.seed};
  } else {
    scenarios = build_scenarios(cfg, jobs);
  }
  if (!flags.out.empty()) cfg.run.out = flags.out;
  const fs::path dir(cfg.run.out);

  const auto runs = run_seeds(scenarios, cfg.experiment, jobs);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].error) continue;
    try {
      std::rethrow_exception(runs[i].error);
    } catch (const DivergenceError& e) {
      throw DivergenceError("seed " + std::to_string(cfg.run.seeds[i]) + ": " + e.what(), e.time());
    }
  }

  std::vector<std::vector<MetricsRecord>> all;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ostringstream os;
    write_metrics_csv(os, cfg.run.seeds[i], runs[i].result.records);
    write_file_atomic(dir / ("metrics_seed" + std::to_string(cfg.run.seeds[i]) + ".csv"), os.str());
    all.push_back(runs[i].result.records);
  }
  {
    std::ostringstream os;
    write_aggregate_csv(os, all);
    write_file_atomic(dir / "aggregate.csv", os.str());
  }
  write_file_atomic(dir / "effective_config.ini", serialize_config(cfg));

  const auto& first = runs.front().result.records;
  out << "command=run\n"
      << "out=" << dir.string() << '\n'
      << "seeds=" << join(cfg.run.seeds) << '\n'
      << "rows_per_seed=" << first.size() << '\n';
  for (Metric m : kAllMetrics) {
    if (!has_metric(first, m)) continue;
    double acc = 0.0;
    for (const auto& r : runs) acc += *r.result.records.back().get(m);
    out << "final." << metric_name(m) << '=' << fmt(acc / static_cast<double>(runs.size())) << '\n';
  }
  for (Metric m : kAllMetrics) {
    if (!has_metric(first, m)) continue;
    const auto mean = mean_series(runs, m);
    for (int tc : scenarios.front().change_times)
      out << "spike." << metric_name(m) << ".t" << tc << '=' << (rises_across(mean, tc) ? "true" : "false") << '\n';
  }
  double min_pc = std::numeric_limits<double>::infinity();
  double min_co = min_pc;
  for (const auto& r : runs)
    for (const auto& f : r.result.feasibility) {
      min_pc = std::min(min_pc, f.min_eig_pc);
      min_co = std::min(min_co, f.min_eig_co);
    }
  if (std::isfinite(min_pc)) out << "min_eig.pc=" << fmt(min_pc) << "\nmin_eig.co=" << fmt(min_co) << '\n';
  return kExitOk;
}

constexpr const char* kSweepKeys[] = {"P", "C", "alpha", "beta", "gamma"};

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

std::vector<GridAxis> parse_grid(const std::vector<std::string>& specs) {
  std::vector<GridAxis> axes;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    std::string key = spec.substr(0, eq);
    if (key.rfind("solver.", 0) == 0) key = key.substr(7);
    if (std::find(std::begin(kSweepKeys), std::end(kSweepKeys), key) == std::end(kSweepKeys))
      throw ConfigError("sweep.grid." + key, "not a sweepable parameter (P, C, alpha, beta, gamma)");
    if (eq == std::string::npos) throw ConfigError("sweep.grid." + key, "expected key=v1,v2,...");
    for (const auto& a : axes)
      if (a.key == key) throw ConfigError("sweep.grid." + key, "listed twice");
    GridAxis axis{key, {}};
    std::string rest = spec.substr(eq + 1);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      const auto comma = rest.find(',', pos);
      const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (!item.empty()) axis.values.push_back(item);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

std::string solver_value(const RunConfig& cfg, const std::string& key) {
  const SolverConfig& s = cfg.experiment.solver;
  if (key == "P") return std::to_string(s.P);
  if (key == "C") return std::to_string(s.C);
  if (key == "alpha") return exact(s.alpha);
  if (key == "beta") return exact(s.beta);
  return exact(cfg.experiment.gamma);
}

struct Cell {
  std::map<std::string, std::string> params;
  std::string status = "ok";
  std::array<double, kAllMetrics.size()> steady{};
};

int cmd_sweep(const CommonFlags& flags, const std::vector<std::string>& grid, int jobs, std::ostream& out) {
  RunConfig cfg = effective_config(flags);
  if (!flags.out.empty()) cfg.run.out = flags.out;
  const auto axes = parse_grid(grid);
  const fs::path dir(cfg.run.out);

  std::size_t cells_total = axes.empty() ? 0 : 1;
  for (const auto& a : axes) cells_total *= a.values.size();

  std::vector<Cell> cells(cells_total);
  for (std::size_t c = 0; c < cells_total; ++c) {
    std::size_t rem = c;
    for (std::size_t k = axes.size(); k-- > 0;) {
      cells[c].params[axes[k].key] = axes[k].values[rem % axes[k].values.size()];
      rem /= axes[k].values.size();
    }
    for (const char* key : kSweepKeys)
      if (!cells[c].params.count(key)) cells[c].params[key] = solver_value(cfg, key);
  }

  const std::vector<Scenario> scenarios = cells_total ? build_scenarios(cfg, jobs) : std::vector<Scenario>{};
  for (auto& cell : cells) {
    RunConfig cell_cfg = cfg;
    try {
      for (const auto& [key, value] : cell.params) apply_override(cell_cfg, "solver." + key + "=" + value);
      cell_cfg.validate();
    } catch (const ConfigError& e) {
      cell.status = "config_error:" + e.field();
      continue;
    }
    const auto runs = run_seeds(scenarios, cell_cfg.experiment, jobs);
    for (std::size_t i = 0; i < runs.size() && cell.status == "ok"; ++i) {
      if (!runs[i].error) continue;
      try {
        std::rethrow_exception(runs[i].error);
      } catch (const DivergenceError& e) {
        cell.status = "diverged:seed=" + std::to_string(cfg.run.seeds[i]) + ":t=" + std::to_string(e.time());
      } catch (const std::exception& e) {
        cell.status = "error:seed=" + std::to_string(cfg.run.seeds[i]);
      }
    }
    if (cell.status != "ok") continue;
    for (std::size_t j = 0; j < kAllMetrics.size(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < runs.size(); ++i)
        acc += steady_state(metric_series(runs[i].result.records, kAllMetrics[j]), scenarios[i]);
      cell.steady[j] = acc / static_cast<double>(runs.size());
    }
  }

  std::ostringstream os;
  os << "P,C,alpha,beta,gamma,status";
  for (Metric m : kAllMetrics) os << ",ss_" << metric_name(m);
  os << '\n';
  int failed = 0;
  for (const auto& cell : cells) {
    for (const char* key : kSweepKeys) os << cell.params.at(key) << ',';
    os << cell.status;
    if (cell.status != "ok") ++failed;
    for (double v : cell.steady) {
      os << ',';
      if (cell.status == "ok" && !std::isnan(v)) os << fmt(v);
    }
    os << '\n';
  }
  write_file_atomic(dir / "sweep.csv", os.str());
  write_file_atomic(dir / "effective_config.ini", serialize_config(cfg));

  out << "command=sweep\n"
      << "out=" << (dir / "sweep.csv").string() << '\n'
      << "cells=" << cells.size() << '\n'
      << "failed_cells=" << failed << '\n';

  std::vector<const GridAxis*> varying;
  for (const auto& a : axes)
    if (a.values.size() > 1) varying.push_back(&a);
  if (varying.size() == 1 && cfg.experiment.references.imle) {
    const std::size_t j = static_cast<std::size_t>(Metric::PcImle);
    bool inc = true, dec = true, known = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].status != "ok" || std::isnan(cells[c].steady[j])) known = false;
      if (c == 0 || !known) continue;
      inc = inc && cells[c].steady[j] > cells[c - 1].steady[j];
      dec = dec && cells[c].steady[j] < cells[c - 1].steady[j];
    }
    out << "monotone.nmse_pc_imle." << varying.front()->key << '='
        << (!known ? "undetermined" : inc ? "increasing" : dec ? "decreasing" : "none") << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming time-varying graphical model tracker"};
  app.require_subcommand(1);

  CommonFlags gen_flags, run_flags, sweep_flags;
  std::string scenario_path;
  std::vector<std::string> grid;
  int run_jobs = 1, sweep_jobs = 1;

  auto* gen = app.add_subcommand("generate", "Generate a scenario file");
  add_common(gen, gen_flags, "Scenario file to write");
  auto* run = app.add_subcommand("run", "Run the P-C and C-O trackers and write NMSE CSVs");
  add_common(run, run_flags, "Output directory");
  run->add_option("--scenario", scenario_path, "Scenario file from `generate`");
  run->add_option("--jobs", run_jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid and write steady-state NMSE per cell");
  add_common(sweep, sweep_flags, "Output directory");
  sweep->add_option("--grid", grid, "Axis, key=v1,v2,... over P, C, alpha, beta, gamma (repeatable)")
      ->allow_extra_args(false);
  sweep->add_option("--jobs", sweep_jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_flags, out);
    if (run->parsed()) return cmd_run(run_flags, scenario_path, run_jobs, out);
    return cmd_sweep(sweep_flags, grid, sweep_jobs, out);
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "diverged at time " << e.time() << ": " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "i/o failure: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace tvtopo

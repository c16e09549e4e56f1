#ifndef TVTOPO_CONFIG_HPP
#define TVTOPO_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tvtopo/harness.hpp"
#include "tvtopo/synthgen.hpp"

namespace tvtopo {

inline constexpr int kConfigSchemaVersion = 1;

struct RunSection {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string out = "results";
};

/**
 * Everything a CLI invocation needs.  On disk it is a sectioned key/value
 * text file:
 *
 *   schema_version = 1
 *   [scenario]   n, T, segment_length, perturb_pct, density, margin, scale
 *   [solver]     P, C, alpha, beta, h, eps, gamma, cov_ridge, mle_ridge, init_scale
 *   [run]        seeds, references, out, feasibility_stride
 *
 * `#` starts a comment.  Unknown sections or keys are rejected.  Keys not
 * present keep their defaults, which reproduce the N = 8 tracking setup.
 * The per-run seed comes from run.seeds; scenario.seed is not a file key.
 */
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  ScenarioConfig scenario;
  ExperimentConfig experiment;
  RunSection run;

  void validate() const;
  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

/// Parses config text on top of the defaults.  Throws ConfigError naming the
/// offending dotted key (or "line N" for syntax errors).
RunConfig parse_config(std::string_view text);
/// Throws IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

/// Applies one "section.key=value" assignment.
void apply_override(RunConfig& cfg, std::string_view assignment);

/// "bmle,imle,truth" style list; "none" selects nothing.
ReferenceSet parse_references(std::string_view text);
std::string format_references(const ReferenceSet& refs);

}  // namespace tvtopo

#endif  // TVTOPO_CONFIG_HPP

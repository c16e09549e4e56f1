#ifndef TVTOPO_CLI_HPP
#define TVTOPO_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace tvtopo {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitIo = 4,
  kExitInternal = 5,
};

/**
 * The tvtopo command line.
 *
 *   tvtopo generate [--config F] [--seed K] [--out FILE] [--set k=v]...
 *   tvtopo run      [--config F] [--seed K] [--out DIR] [--scenario FILE] [--jobs J] [--set k=v]...
 *   tvtopo sweep    [--config F] [--seed K] [--out DIR] [--grid key=v1,v2]... [--jobs J] [--set k=v]...
 *
 * Precedence is defaults < config file < --set < dedicated flags.  The
 * summary on `out` is key=value lines; diagnostics go to `err`.  Returns one
 * of the ExitCode values.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes `content` to a sibling temporary file and renames it over `path`.
/// Creates missing parent directories.  Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace tvtopo

#endif  // TVTOPO_CLI_HPP

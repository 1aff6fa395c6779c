#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace anderson::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kCheckFailed = 3,
};

/// Runs the command line `args` (without the program name). Artifacts go to
/// `--out`, the config's `out`, or `$ANDERSON_SPECTRA_OUT/<subcommand>-<digest>`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Output directory the run writes to when no `out` is configured.
std::filesystem::path default_output_root();

}  // namespace anderson::cli

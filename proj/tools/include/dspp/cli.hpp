#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dspp::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kBadConfig = 4,
  kBadCheckpoint = 5,
  kBadData = 6,
  kDiverged = 7,
};

/// Runs one subcommand. `args` excludes the program name. Metrics go to `out`
/// as JSON lines; the resolved configuration and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dspp::cli

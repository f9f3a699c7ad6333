#pragma once

#include <iosfwd>

namespace ggp {

/// Process exit codes of the `ggp` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitFileNotFound = 3,
  kExitFormat = 4,
  kExitVersionMismatch = 5,
  kExitConfigInvalid = 6,
  kExitData = 7,
};

/// Runs one `ggp` command. Results go to `out`; failures print a single JSON
/// line {"error", "kind", "message", "exit_code"} to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ggp

#pragma once

#include <ostream>

namespace dsn::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// Entry point of the `dsn` tool:
//   dsn {gen-data|train|eval|ablate|grad-check} [flags]
// Returns one of ExitCode. Usage errors are detected before any file is
// written.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Applies DSN_LOG (quiet, info, debug; unset = info). Throws ConfigError
// for any other value.
void configure_logging(const char* level);

}  // namespace dsn::cli

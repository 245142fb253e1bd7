#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace driftlab {

/// Exit codes of the command-line interface.
enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_invalid = 2,
  exit_not_converged = 3,
};

/// Runs the `driftlab` command line. `args` excludes the program name.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace driftlab

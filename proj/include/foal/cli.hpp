#pragma once

#include <iosfwd>

namespace foal::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kValidationError = 1,
  kToleranceFailure = 2,
};

/// Entry point of the `foal` tool: run | verify | bench | norms | make-synthetic.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace foal::cli

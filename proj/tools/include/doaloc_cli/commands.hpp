#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

#include "doaloc/error.hpp"

namespace doaloc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 2,
  kExitNongeneric = 3,
  kExitSolver = 4,
  kExitConfig = 5,
};

int exit_code_for(ErrorCode code);

/// Set by the SIGINT handler; campaigns stop after the running trials.
std::atomic<bool>& interrupt_flag();

/// Parses `args` (without the program name) and runs one subcommand.
/// Results go to files; summaries to `out`, errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace doaloc::cli

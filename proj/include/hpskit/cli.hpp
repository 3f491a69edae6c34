#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hpskit {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitValidation = 4,
  kExitComputation = 5,
  kExitIo = 6,
};

/// Runs the hpskit command line with args excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hpskit

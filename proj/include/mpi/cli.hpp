#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpi {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitGateway = 3,
  kExitInvalidResponses = 4,
};

/// Entry point behind the `mpi` binary. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mpi

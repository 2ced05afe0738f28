#pragma once

#include <ostream>

namespace gelkit::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInfeasible = 2,
  kNonConvergence = 3,
  kIo = 4,
};

/// Entry point of the gelkit tool. Reports go to `out` (or to --out), messages
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gelkit::cli

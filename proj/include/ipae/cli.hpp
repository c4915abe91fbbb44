#pragma once

#include <iosfwd>

namespace ipae::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDiverged = 2, kIo = 3 };

/// Entry point behind the `ipae` executable: gen-data, train, eval, sweep.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ipae::cli

#pragma once

#include <ostream>

#include "msbound/errors.hpp"

namespace msbound::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kUsage = 2,
  kHypothesis = 3,
  kNotStabilizable = 4,
  kAuthority = 5,
  kNumerical = 6,
  kIo = 7,
  kContract = 8,
};

int exit_code_for(ErrorKind kind);

/// Entry point of the msbound tool. Results go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msbound::cli

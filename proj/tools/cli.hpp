#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jfd::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNoMatch = 3,
};

// Runs one verb. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jfd::cli

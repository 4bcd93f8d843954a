#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace doorkin::cli {

/// Exit codes shared by every subcommand.
enum Exit : int {
  kOk = 0,
  kFailure = 1,     // I/O, parse, corrupt store and other library errors
  kNoResult = 2,    // grasp found no handle, fit had too few observations
  kStopped = 3,     // opening ended before the last iteration
  kUsage = 64,
};

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace doorkin::cli

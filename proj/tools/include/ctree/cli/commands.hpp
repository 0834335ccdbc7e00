#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctree::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kIoError = 1,     // output could not be written, or an unexpected failure
  kUsageError = 2,  // bad or missing flags
  kDataError = 3,   // unreadable/invalid CSV or tree document, row-level errors
  kFitError = 4,    // partitioning failed
};

// Entry point shared by the binary and the tests. args[0] is the program
// name; the rest is a subcommand (fit, predict, export-dot, km, simulate)
// followed by its flags.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctree::cli

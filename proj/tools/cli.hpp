#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace clmod::cli {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kDivergence = 4 };

// Entry point shared by the binary and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clmod::cli

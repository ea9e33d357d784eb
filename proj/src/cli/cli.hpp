#pragma once

#include <string>
#include <vector>

namespace encmap::cli {

enum ExitCode : int {
  kSuccess = 0,
  kPartialFailure = 1,
  kInvalidInvocation = 2,
  kDataError = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace encmap::cli

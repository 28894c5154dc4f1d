#pragma once

#include <string>
#include <vector>

namespace sdil::cli {

// Runs one command. `args` excludes the program name. Exit codes:
//   0  success
//   1  internal error
//   2  usage, config, or input-file problem
//   3  dataset empty after core filtering
//   4  training diverged (non-finite loss)
//   5  checkpoint unreadable or incompatible with the dataset
//   6  negative sampling infeasible
//   7  gradient check failed
int run(std::vector<std::string> args);

}  // namespace sdil::cli

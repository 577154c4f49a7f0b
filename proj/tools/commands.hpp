#pragma once

#include <string>
#include <vector>

namespace spotsim::cli {

// Parses and dispatches a full command line (without argv[0]).
// Exit codes: 0 success, 2 usage error, 3 input/data error.
int run_cli(const std::vector<std::string>& args);

}  // namespace spotsim::cli

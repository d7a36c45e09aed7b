#pragma once

#include <string>
#include <vector>

namespace privloc {

constexpr const char* kToolVersion = "0.1.0";

// Subcommand dispatch: 0 on success, 1 on usage errors, 2 on runtime errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace privloc

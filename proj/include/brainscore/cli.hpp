#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace brainscore {

/// Exit codes: 0 success, 1 internal error, 2 input or usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

/// Runs the `brainscore` command line. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace brainscore

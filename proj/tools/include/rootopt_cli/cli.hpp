#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rootopt::cli {

/// Entry point behind the rootopt binary. `args` excludes the program name.
/// Exit codes: 0 ok, 2 config or setup error, 3 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rootopt::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsnmf::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

/// Runs one command line (args excludes the program name). Diagnostics and
/// error JSON go to `err`, everything else to `out`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace tsnmf::cli

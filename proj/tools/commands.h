#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tcd {
namespace cli {

/// Runs the tcd command line (args excludes the program name). Summaries go
/// to `out`, diagnostics to `err`. Returns the process exit code: 0 success,
/// 2 infeasible, 3 verification failure, 4 input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cli
}  // namespace tcd

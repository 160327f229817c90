#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gaitseq {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitDivergence = 3,
};

/// Entry point of the `gaitseq` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gaitseq

#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace roomsense::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kInvalid = 2, kNoData = 3 };

/// Set by SIGINT/SIGTERM while a long-running command is active.
std::atomic<bool>& interrupt_flag();

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace roomsense::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpn {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitCheckFailed = 3;

/// Entry point of the `mpn` tool. Results go to `out`; progress and timing to
/// `log`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace mpn

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mftn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;  // unknown subcommand or bad flags
inline constexpr int kExitMalformed = 3;

struct OperationEntry {
  std::string operation;
  std::string subcommand;
};
// Every library operation reachable from the command line, with the subcommand that runs it.
const std::vector<OperationEntry>& operation_table();
const std::vector<std::string>& subcommands();
std::string usage();

// args excludes the program name. The report goes to `out` unless --out names a file.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mftn::cli

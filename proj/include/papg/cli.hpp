#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace papg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `papg` command line. argv[0] is the program name. Output goes
/// to `out`, diagnostics to `err`, and `in` supplies passphrases that were
/// not given as flags.
int cli_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err, std::istream& in);

}  // namespace papg

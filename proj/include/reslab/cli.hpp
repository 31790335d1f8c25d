#pragma once

// Command-line front end. Subcommands: scatter, resonances, gamow, transform,
// evolve, survival, oracle-compare, u234.
//
// Options come from flags and from an optional `--config FILE` of key=value
// lines, where each key is a flag name without the leading dashes. Flags win.
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 verification failure.
// Errors are reported on one line as "error: <module>.<Code>: <message>".

#include <iosfwd>
#include <string>
#include <vector>

namespace reslab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerification = 4;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace reslab::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ppsel {

// Subcommands simulate, fit, path, benchmark. Returns the process exit code;
// results go to out (or --out files), diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Convenience for tests: args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ppsel

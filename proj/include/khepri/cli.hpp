#pragma once

#include <iosfwd>

namespace khepri {

// Entry point of the khepri_sim tool: generate, run and export-map
// subcommands. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace khepri

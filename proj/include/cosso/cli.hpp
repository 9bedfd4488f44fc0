#pragma once

#include <string>
#include <vector>

namespace cosso {

// Command-line front end.  Subcommands: fit, predict, classify, simulate,
// spectral, tune.  Options can come from an INI-style key=value config file
// (--config, with [subcommand] sections); explicit flags win over the file.
//
// Every run takes one 64-bit --seed.  Each subcommand derives a private
// stream from it by name ("cli-fit", "cli-tune", ...), and the library splits
// further per purpose and replicate, so no two consumers ever share a stream
// and adding a subcommand cannot perturb another's draws.
//
// Exit codes: 0 success, 1 bad input, 2 a numeric routine gave up, 3 broken
// internal invariant.  Failures print one machine-readable JSON object to
// stderr: {"error": {"type": ..., "message": ...}}.
int run_cli(int argc, const char *const argv[]);

// Convenience for tests: the argument list without the program name.
int run_cli(const std::vector<std::string> &args);

}  // namespace cosso

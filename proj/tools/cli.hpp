#pragma once

#include <iosfwd>

namespace kmdr::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2 };

// Runs one subcommand (fit, adme, ph, simulate). Warnings and errors go to
// `err`, help text to `out`; results are written only to the files named by flags.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kmdr::cli

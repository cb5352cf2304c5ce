// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epchiral::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kInputError = 1, kSolverError = 2 };

/// Parses argv, runs one subcommand and returns its exit code. Summary lines
/// go to out, diagnostics to err; reports are written under --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace epchiral::cli

//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clod {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `clod` subcommand; `args` excludes the program name. Returns
/// kExitUsage for unknown flags, missing inputs and malformed configs,
/// kExitRuntime for failures while running.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace clod

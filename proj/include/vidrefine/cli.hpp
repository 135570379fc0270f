// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace vidrefine {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailures = 2;
inline constexpr int kExitInternal = 3;

/// Entry point of the `vidrefine` command line tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vidrefine

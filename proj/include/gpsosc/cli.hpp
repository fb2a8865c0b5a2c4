// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace gpsosc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;

/// Entry point of the `gpsosc` tool. Writes results to `out` and
/// diagnostics and reports to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gpsosc

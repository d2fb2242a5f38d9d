// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   commands.hpp
 * @brief  The amvnet subcommands as library calls.
 *
 * Every command loads and validates the configuration before creating
 * anything under the output directory, then copies the configuration file
 * verbatim to <out>/config.ini.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace amv {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1, ///< bad arguments or configuration
  kExitData = 2,  ///< unreadable or inconsistent input data
  kExitDiverged = 3,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> predictions; ///< eval input, default <out>/predictions
  std::string axis;                                 ///< sweep: tau or neighbors
  std::vector<double> values;                       ///< sweep values
  bool augment = false;                             ///< train, sweep: augment clouds
};

/**
 * Runs one of synth, assert, train, fuse, eval, sweep. Progress goes to
 * `log`, failures to `err`; the return value is an ExitCode.
 */
int run_command(const std::string &name, const CommandOptions &opts, std::ostream &log,
                std::ostream &err);

} // namespace amv

// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   amvnet.cpp
 * @brief  Command-line entry point.
 */
#include "amvnet/commands.hpp"

#include <CLI11.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <iostream>
#include <string>
#include <utility>

int main(int argc, char **argv) {
#if defined(__GLIBC__)
  // training churns through multi-megabyte temporaries; keep them on the heap
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"Late fusion of two LiDAR segmentation views with an assertion-guided "
               "point head"};
  app.require_subcommand(1);

  amv::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string checkpoint, predictions;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", opts.config, "Run configuration (INI)")->required();
    sub->add_option("--seed", seed, "Override [run] seed");
    sub->add_option("--out", opts.out, "Output directory");
  };

  const std::pair<const char *, const char *> commands[] = {
      {"synth", "Write the configured synthetic dataset"},
      {"assert", "Similarity histogram and uncertain fractions"},
      {"train", "Train the point head on uncertain points"},
      {"fuse", "Fuse both views into final labels"},
      {"eval", "Score predictions on the validation scans"},
      {"sweep", "Retrain and evaluate over tau or neighbour counts"},
  };
  for (const auto &[name, description] : commands) {
    const std::string cmd = name;
    auto *sub = app.add_subcommand(cmd, description);
    add_common(sub);
    if (cmd == "fuse" || cmd == "eval")
      sub->add_option("--checkpoint", checkpoint, "Trained point head (.amvm)");
    if (cmd == "eval")
      sub->add_option("--predictions", predictions, "Directory of <id>.pred files");
    if (cmd == "train" || cmd == "sweep")
      sub->add_flag("--augment", opts.augment, "Augment training clouds ([train] augment_* ranges)");
    if (cmd == "sweep") {
      sub->add_option("--axis", opts.axis, "tau or neighbors")->required();
      sub->add_option("--values", opts.values, "Comma separated values")->delimiter(',');
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? amv::kExitOk : amv::kExitUsage;
  }

  CLI::App *sub = app.get_subcommands().front();
  if (sub->count("--seed"))
    opts.seed = seed;
  if (!checkpoint.empty())
    opts.checkpoint = checkpoint;
  if (!predictions.empty())
    opts.predictions = predictions;
  return amv::run_command(sub->get_name(), opts, std::cout, std::cerr);
}

// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   config.hpp
 * @brief  Run configuration: one INI file drives a full reproduction run.
 *
 * Sections:
 *   [run]          seed, num_classes, tau, neighbors, strata, histogram_bins,
 *                  sweep_taus, emit_ensemble_scores
 *   [data]         dir, remap          (on-disk dataset; excludes [synthetic])
 *   [synthetic]    train_scans, val_scans, points_per_scan
 *   [primitive.*]  one per scene primitive
 *   [scorer.f], [scorer.g]  emulated view scorers
 *   [rv], [bev]    projection grids
 *   [train]        point-head training
 */
#pragma once

#include "amvnet/pointhead.hpp"
#include "amvnet/projection.hpp"
#include "amvnet/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amv {

enum class ViewGrid { None, Rv, Bev };

struct SyntheticSource {
  std::size_t train_scans = 20;
  std::size_t val_scans = 5;
  std::size_t points_per_scan = 20000;
  std::vector<Primitive> primitives;
  ScorerProfile scorer_f;
  ScorerProfile scorer_g;
  ViewGrid grid_f = ViewGrid::None; ///< scores shared per cell of this grid
  ViewGrid grid_g = ViewGrid::None;
};

struct DiskSource {
  std::filesystem::path dir;
  std::optional<std::filesystem::path> remap;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::uint32_t num_classes = 0;
  double tau = 0.85;
  std::vector<double> strata{0, 10, 20, 30, 40, 50};
  int histogram_bins = 20;
  std::vector<double> sweep_taus{0.5, 0.7, 0.85, 0.95, 1.0};
  bool emit_ensemble_scores = false; ///< fuse also writes <id>.ens.amvs
  std::optional<SyntheticSource> synthetic;
  std::optional<DiskSource> disk;
  RVConfig rv;
  BEVConfig bev;
  HeadTrainConfig train;
  AugmentRanges augment_ranges; ///< used only when augmentation is requested
  std::string text; ///< verbatim file contents

  /// Replaces the seed everywhere it is consumed.
  void set_seed(std::uint64_t s);
};

/// Parses and fully validates. Relative data paths resolve against `base`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path &base = {});
RunConfig load_run_config(const std::filesystem::path &path);

} // namespace amv

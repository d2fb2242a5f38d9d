// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   fusion.hpp
 * @brief  Final label assembly and two-view ensemble combiners.
 */
#pragma once

#include "amvnet/assertion.hpp"
#include "amvnet/io.hpp"
#include "amvnet/pointhead.hpp"
#include "amvnet/types.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace amv {

/// Elementwise sqrt(f * g), rows renormalized.
ScoreMatrix combine_geometric(const ScoreMatrix &f, const ScoreMatrix &g);
/// Elementwise (f + g) / 2.
ScoreMatrix combine_arithmetic(const ScoreMatrix &f, const ScoreMatrix &g);
/// Elementwise max(f, g), rows renormalized.
ScoreMatrix combine_max(const ScoreMatrix &f, const ScoreMatrix &g);

enum class Combiner { Geometric, Arithmetic, Max };
ScoreMatrix combine(Combiner which, const ScoreMatrix &f, const ScoreMatrix &g);
Combiner parse_combiner(std::string_view name);

enum class LabelSource : std::uint8_t { Ensemble = 0, Head = 1 };

struct FusionResult {
  LabelVector labels;
  std::vector<LabelSource> source;
  std::optional<ScoreMatrix> combined_scores; ///< geometric ensemble rows
  UncertaintyMask mask;
};

/**
 * Head labels for uncertain points (in ascending point order), argmax of the
 * geometric ensemble elsewhere.
 */
FusionResult assemble_fusion(const ScoreMatrix &f, const ScoreMatrix &g, UncertaintyMask mask,
                             const std::vector<std::uint32_t> &head_labels);

FusionResult fuse_predictions(const PointCloud &cloud, const ScoreMatrix &f,
                              const ScoreMatrix &g, double tau, const PointHeadModel &model,
                              const KdTree *tree = nullptr);

/// One byte per point: 0 ensemble, 1 head.
Bytes write_source_tags(const std::vector<LabelSource> &source);

} // namespace amv

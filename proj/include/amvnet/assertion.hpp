// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   assertion.hpp
 * @brief  Cross-view agreement test that routes points to the point head.
 *
 * A point is uncertain when the cosine similarity of its two score rows is
 * at most tau. Score rows are non-negative so similarities lie in [0, 1].
 */
#pragma once

#include "amvnet/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace amv {

struct UncertaintyMask {
  std::vector<bool> uncertain;
  std::vector<double> similarity;
  double tau = 0.0;

  std::size_t size() const { return uncertain.size(); }
  std::size_t count() const;
  double fraction() const;
  /// Indices i with uncertain[i], ascending.
  std::vector<std::size_t> uncertain_indices() const;
};

/// <f,g> / (|f| |g|); zero when either vector is all zeros.
double cosine_similarity(std::span<const double> f, std::span<const double> g);
double cosine_similarity(std::span<const float> f, std::span<const float> g);

UncertaintyMask uncertainty_mask(const ScoreMatrix &f, const ScoreMatrix &g, double tau);

/// Same mask for a different threshold, reusing the similarities.
UncertaintyMask rethreshold(const UncertaintyMask &mask, double tau);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count = 0;
};

/// Equal-width bins over [0, 1]; bin j covers (lo, hi], the first bin also
/// holds 0.
std::vector<HistogramBin> similarity_histogram(const UncertaintyMask &mask, int num_bins);

/// "bin_lo,bin_hi,count" rows with header.
std::string histogram_csv(const std::vector<HistogramBin> &bins);

/**
 * Draws batch_size indices uniformly without replacement from the uncertain
 * points (restricted to `eligible` when given). When there are fewer
 * candidates than batch_size, every candidate is taken once and the rest of
 * the batch is filled by drawing with replacement.
 */
std::vector<std::size_t> sample_training_batch(const UncertaintyMask &mask,
                                               std::size_t batch_size, std::uint64_t seed,
                                               const std::vector<bool> *eligible = nullptr);

} // namespace amv

// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   metrics.hpp
 * @brief  Confusion-matrix based IoU metrics.
 */
#pragma once

#include "amvnet/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace amv {

/// counts[g * K + p]: rows are ground truth, columns predictions.
struct ConfusionMatrix {
  std::uint32_t num_classes = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t ignored = 0;

  explicit ConfusionMatrix(std::uint32_t k = 0) : num_classes(k), counts(std::size_t{k} * k, 0) {}

  std::uint64_t at(std::uint32_t gt, std::uint32_t pred) const {
    return counts[std::size_t{gt} * num_classes + pred];
  }
  std::uint64_t total() const;
  ConfusionMatrix &operator+=(const ConfusionMatrix &o);

  friend bool operator==(const ConfusionMatrix &, const ConfusionMatrix &) = default;
};

ConfusionMatrix confusion_matrix(const LabelVector &pred, const LabelVector &gt,
                                 std::uint32_t num_classes);

/// TP / (TP + FP + FN) per class; NaN for classes absent from both.
std::vector<double> class_iou(const ConfusionMatrix &cm);
/// Mean over present classes. Throws DataError when nothing was evaluated.
double miou(const ConfusionMatrix &cm);
/// Ground-truth-frequency weighted IoU over present classes.
double fw_iou(const ConfusionMatrix &cm);

struct Stratum {
  double lo = 0.0, hi = 0.0;
  ConfusionMatrix cm;
};

struct StratifiedMetrics {
  std::vector<Stratum> strata;
  ConfusionMatrix dropped; ///< points outside [first edge, last edge)
};

/// Partitions points by xy radius into [e_j, e_{j+1}).
StratifiedMetrics stratified_confusion(const LabelVector &pred, const LabelVector &gt,
                                       const PointCloud &cloud, const std::vector<double> &edges);

/// Accumulates another scan into existing strata (same edges).
void accumulate(StratifiedMetrics &into, const StratifiedMetrics &scan);

/// Per-stratum mIoU; NaN where the stratum has no evaluated points.
std::vector<double> stratified_miou(const LabelVector &pred, const LabelVector &gt,
                                    const PointCloud &cloud, const std::vector<double> &edges);

/// "class,iou" rows for every class, then "miou,..." and "fw_iou,...".
std::string metrics_csv(const ConfusionMatrix &cm);
/// "r_lo,r_hi,miou" rows; empty strata report "nan".
std::string strata_csv(const StratifiedMetrics &m);

} // namespace amv

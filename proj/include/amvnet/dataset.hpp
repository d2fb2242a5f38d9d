// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   dataset.hpp
 * @brief  Scan collections: synthesis, on-disk layout and the shared
 *         train / evaluate pipeline used by the CLI and the tests.
 *
 * On disk a dataset is a directory holding manifest.txt ("<id> train|val"
 * per line) and, per scan, <id>.bin, <id>.label, <id>.f.amvs and
 * <id>.g.amvs. A missing label file means the scan is unlabelled.
 */
#pragma once

#include "amvnet/config.hpp"
#include "amvnet/metrics.hpp"
#include "amvnet/pointhead.hpp"
#include "amvnet/types.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace amv {

struct Scan {
  std::string id;
  bool validation = false;
  PointCloud cloud;
  LabelVector gt;
  ScoreMatrix f;
  ScoreMatrix g;

  ScanRef ref() const { return {&cloud, &gt, &f, &g}; }
};

struct Dataset {
  std::uint32_t num_classes = 0;
  std::vector<Scan> scans;

  std::vector<const Scan *> split(bool validation) const;
};

/// Scan `index` of the synthetic source; indices past train_scans are
/// validation scans.
Scan synthesize_scan(const RunConfig &cfg, std::size_t index);

/// Re-projects per-point scores through a view grid: every point in a cell
/// receives the scores of the cell's representative.
ScoreMatrix share_scores_on_grid(const ScoreMatrix &scores, const PointCloud &cloud,
                                 ViewGrid grid, const RunConfig &cfg);

/// Synthesizes or reads the configured dataset.
Dataset load_dataset(const RunConfig &cfg);

Dataset read_dataset_dir(const std::filesystem::path &dir, const RemapTable &remap,
                         std::uint32_t num_classes);
void write_dataset_dir(const Dataset &data, const std::filesystem::path &dir);

TrainResult train_on(const Dataset &data, const HeadTrainConfig &cfg);

/// Scores of every method on one split, accumulated over its scans.
struct Evaluation {
  ConfusionMatrix f, g, geometric, arithmetic, max, amvnet;
  StratifiedMetrics amvnet_strata;
  std::size_t points = 0;
  std::size_t uncertain = 0; ///< filled by the model overload only

  double uncertain_fraction() const {
    return points == 0 ? 0.0 : static_cast<double>(uncertain) / static_cast<double>(points);
  }
};

/// Labels for one scan, e.g. from fusion or from prediction files.
using Predictor = std::function<LabelVector(const Scan &)>;

Evaluation evaluate_split(const Dataset &data, bool validation, const std::vector<double> &strata,
                          const Predictor &predict);

/// Evaluates AMVNet fusion with `model` at threshold `tau`.
Evaluation evaluate_split(const Dataset &data, bool validation, const PointHeadModel &model,
                          double tau, const std::vector<double> &strata);

/// "method,miou,fw_iou" for the two views, the three ensembles and AMVNet.
std::string comparison_csv(const Evaluation &eval);

} // namespace amv

// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   pointhead.hpp
 * @brief  Refinement network for uncertain points, its training loop and
 *         inference path.
 *
 * The head embeds each neighbour row with a shared three-layer ReLU MLP,
 * max-pools the embeddings, concatenates the query's own point features and
 * maps the result to K logits with one dense layer.
 */
#pragma once

#include "amvnet/assertion.hpp"
#include "amvnet/neighborhood.hpp"
#include "amvnet/nn.hpp"
#include "amvnet/synthetic.hpp"
#include "amvnet/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace amv {

struct PointHeadModel {
  std::array<nn::DenseLayer, 3> mlp;
  nn::DenseLayer fc;
  std::uint32_t num_classes = 0;
  std::uint32_t neighbors = 0;
  PhiMode phi = PhiMode::OffsetAndNorm;
  /// Affine map applied to the (x, y, z, intensity) block of the point
  /// features: (v - shift) / scale. Identity unless standardization is on.
  std::array<double, 4> coord_shift{0, 0, 0, 0};
  std::array<double, 4> coord_scale{1, 1, 1, 1};

  std::size_t set_width() const { return 2 * num_classes + phi_width(phi); }
  std::size_t point_width() const { return 2 * num_classes + 4; }
  std::size_t parameter_count() const;

  std::vector<std::span<double>> parameter_blocks();

  nn::Checkpoint to_checkpoint() const;
  static PointHeadModel from_checkpoint(const nn::Checkpoint &ckpt);
};

PointHeadModel init_point_head(std::uint32_t num_classes, std::uint32_t neighbors,
                               std::array<int, 3> widths, std::uint64_t seed,
                               PhiMode phi = PhiMode::OffsetAndNorm);

/// Logits for one point. `point` is the raw [f | g | x] vector.
nn::Vector point_head_forward(const PointHeadModel &model, const nn::Vector &point,
                              const nn::Matrix &set);

/// Examples stacked for batched evaluation. Every set has model.neighbors rows.
struct HeadBatch {
  nn::Matrix sets;   ///< (B * n) x set_width, example b occupies rows [b*n, (b+1)*n)
  nn::Matrix points; ///< B x point_width, raw
  std::vector<std::uint32_t> targets;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

struct HeadGradients {
  std::array<nn::DenseGrad, 3> mlp;
  nn::DenseGrad fc;

  std::vector<std::span<const double>> blocks() const;
};

/// Batched logits, B x K.
nn::Matrix point_head_logits(const PointHeadModel &model, const HeadBatch &batch);

struct HeadLoss {
  double loss = 0.0;
  HeadGradients grads;
};

/// Mean weighted cross-entropy over the batch and its exact gradients.
HeadLoss point_head_backward(const PointHeadModel &model, const HeadBatch &batch,
                             std::span<const double> class_weights);

enum class ClassWeighting { SqrtInverse, Uniform };

struct AugmentRanges {
  double scale_lo = 0.95, scale_hi = 1.05;
  double jitter_sigma = 0.01;
  bool flips = true;
  bool rotate = true;
};

struct HeadTrainConfig {
  int epochs = 20;
  std::size_t batch_size = 256;
  double tau = 0.85;
  std::uint32_t neighbors = 15;
  std::array<int, 3> widths{64, 64, 64};
  nn::OneCycle schedule{0.01, 0.3, 25.0, 1e4};
  double momentum = 0.9;
  std::uint64_t seed = 0;
  ClassWeighting weighting = ClassWeighting::SqrtInverse;
  PhiMode phi = PhiMode::OffsetAndNorm;
  bool standardize = false;
  std::optional<AugmentRanges> augment;

  void validate() const;
};

/// Borrowed view of one scan's inputs.
struct ScanRef {
  const PointCloud *cloud = nullptr;
  const LabelVector *gt = nullptr;
  const ScoreMatrix *f = nullptr;
  const ScoreMatrix *g = nullptr;
};

struct EpochStat {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  PointHeadModel model;
  std::vector<EpochStat> trace;
  std::vector<std::string> warnings;
  std::vector<double> class_weights;
};

/// Square-root inverse frequency over non-ignore labels, normalized so the
/// present classes average to one; absent classes get zero.
std::vector<double> sqrt_inverse_class_weights(const std::vector<const LabelVector *> &labels,
                                               std::uint32_t num_classes);

TrainResult train_point_head(const std::vector<ScanRef> &scans, const HeadTrainConfig &cfg);

/// "epoch,mean_loss,lr" rows with header.
std::string loss_trace_csv(const std::vector<EpochStat> &trace);

/// Head labels for the uncertain points, in ascending point order. Uses
/// `tree` when supplied, else builds one.
std::vector<std::uint32_t> predict_uncertain(const PointHeadModel &model,
                                             const PointCloud &cloud, const ScoreMatrix &f,
                                             const ScoreMatrix &g, const UncertaintyMask &mask,
                                             const KdTree *tree = nullptr);

} // namespace amv

// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   synthetic.hpp
 * @brief  Deterministic synthetic scenes, emulated view scorers and point
 *         augmentation.
 */
#pragma once

#include "amvnet/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace amv {

enum class PrimitiveKind { Annulus, Boxes, Poles };

/**
 * A labelled geometric primitive. Annuli are ground bands; boxes and poles
 * are instanced `count` times at random positions inside the radial/angular
 * band, standing on z_lo.
 */
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Annulus;
  std::uint32_t class_id = 0;
  double weight = 1.0; ///< relative share of the scene's points
  double r_lo = 0.0, r_hi = 10.0;
  double theta_lo = 0.0, theta_hi = 6.283185307179586;
  double z_lo = -1.8, z_hi = -1.6; ///< annulus z band; base height for objects
  int count = 1;                   ///< instances (boxes, poles)
  double size_x = 1.0, size_y = 1.0, size_z = 1.0; ///< box extents; poles use size_x as radius
  double intensity_mean = 0.5, intensity_sigma = 0.05;
};

struct SceneConfig {
  std::uint64_t seed = 0;
  std::size_t num_points = 0;
  std::uint32_t num_classes = 0;
  std::vector<Primitive> primitives;

  /// Throws ConfigError on invalid class ids or extents.
  void validate() const;
};

/// Ordered confusion a -> b applied with the given probability.
struct Confusion {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  double probability = 0.0;
};

/**
 * Error model of one emulated view network. A point at radius r is first
 * subjected to the confusion list for its class; otherwise it is wrong with
 * probability (1 - base_accuracy) + range_error(r), where range_error is
 * piecewise linear between knots and constant beyond them. Wrong points
 * peak at a uniformly chosen other class.
 */
struct ScorerProfile {
  double base_accuracy = 0.9;
  std::vector<std::pair<double, double>> range_error; ///< (radius, added error)
  std::vector<Confusion> confusions;
  double temperature = 1.0;
  double logit_noise = 0.5;             ///< sigma of background logits
  double margin_lo = 2.0, margin_hi = 4.0;     ///< peak margin when correct
  double error_margin_lo = 0.5, error_margin_hi = 2.0; ///< peak margin when wrong
  double runner_up = 0.0; ///< probability a wrong row keeps the truth as runner-up
  /// Voxel edge in meters. When positive, the error decision is drawn once
  /// per (voxel, class) so that mistakes cover spatial patches.
  double error_cell = 0.0;

  double error_probability(double radius) const;
  void validate(std::uint32_t num_classes) const;
};

/// Coordinates and intensity are float32-representable, so a scene survives
/// a cloud file round trip unchanged.
std::pair<PointCloud, LabelVector> generate_synthetic_scene(const SceneConfig &config);

/// Emits normalized scores for `cloud` under `profile`. IGNORE points get
/// uniform rows.
ScoreMatrix synthetic_scorer(const PointCloud &cloud, const LabelVector &gt,
                             const ScorerProfile &profile, std::uint64_t seed);

struct AugmentParams {
  double scale = 1.0;
  bool flip_x = false;
  bool flip_y = false;
  double jitter_sigma = 0.0;
  double yaw = 0.0; ///< radians
};

/// scale -> flip -> yaw rotation -> jitter; intensity and order untouched.
PointCloud augment_cloud(const PointCloud &cloud, const AugmentParams &params,
                         std::uint64_t seed);

} // namespace amv

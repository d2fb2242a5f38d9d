// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   synthetic.cpp
 * @brief  Synthetic scene generation, emulated scorers, augmentation.
 */
#include "amvnet/synthetic.hpp"

#include "amvnet/error.hpp"
#include "amvnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace amv {

void SceneConfig::validate() const {
  if (num_points == 0)
    throw ConfigError("scene num_points must be positive");
  if (num_classes == 0)
    throw ConfigError("scene num_classes must be positive");
  if (primitives.empty())
    throw ConfigError("scene has no primitives");
  for (const Primitive &p : primitives) {
    if (p.class_id >= num_classes)
      throw ConfigError("primitive class id " + std::to_string(p.class_id) +
                        " >= num_classes");
    if (!(p.weight > 0.0))
      throw ConfigError("primitive weight must be positive");
    if (!(p.r_hi > p.r_lo) || p.r_lo < 0.0 || !(p.theta_hi > p.theta_lo))
      throw ConfigError("primitive radial/angular extent must be positive");
    if (p.kind == PrimitiveKind::Annulus && !(p.z_hi >= p.z_lo))
      throw ConfigError("annulus z band inverted");
    if (p.kind != PrimitiveKind::Annulus &&
        (p.count < 1 || !(p.size_x > 0.0) || !(p.size_z > 0.0) ||
         (p.kind == PrimitiveKind::Boxes && !(p.size_y > 0.0))))
      throw ConfigError("object primitive extents and count must be positive");
  }
}

namespace {

// kept out of line: GCC 11 at -O3 vectorizes the paired round trips away
[[gnu::noinline]] double to_float32(double v) { return static_cast<float>(v); }

struct Placement {
  double cx, cy, heading;
};

Point sample_box_surface(const Primitive &p, const Placement &at, Rng &rng) {
  // four walls plus the roof, chosen by area
  const double a_x = p.size_x * p.size_z, a_y = p.size_y * p.size_z;
  const double a_top = p.size_x * p.size_y;
  const double total = 2.0 * a_x + 2.0 * a_y + a_top;
  double pick = rng.uniform() * total;
  double lx = 0, ly = 0, lz = 0;
  const double hx = 0.5 * p.size_x, hy = 0.5 * p.size_y;
  if (pick < a_top) {
    lx = rng.uniform(-hx, hx);
    ly = rng.uniform(-hy, hy);
    lz = p.size_z;
  } else {
    pick -= a_top;
    lz = rng.uniform(0.0, p.size_z);
    if (pick < 2.0 * a_x) {
      lx = rng.uniform(-hx, hx);
      ly = pick < a_x ? -hy : hy;
    } else {
      ly = rng.uniform(-hy, hy);
      lx = pick - 2.0 * a_x < a_y ? -hx : hx;
    }
  }
  const double c = std::cos(at.heading), s = std::sin(at.heading);
  return {at.cx + c * lx - s * ly, at.cy + s * lx + c * ly, p.z_lo + lz, 0.0};
}

Point sample_pole_surface(const Primitive &p, const Placement &at, Rng &rng) {
  const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {at.cx + p.size_x * std::cos(a), at.cy + p.size_x * std::sin(a),
          p.z_lo + rng.uniform(0.0, p.size_z), 0.0};
}

} // namespace

std::pair<PointCloud, LabelVector> generate_synthetic_scene(const SceneConfig &config) {
  config.validate();

  double weight_sum = 0.0;
  for (const Primitive &p : config.primitives)
    weight_sum += p.weight;

  // largest-remainder apportionment of points to primitives
  std::vector<std::size_t> counts(config.primitives.size());
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    counts[j] = static_cast<std::size_t>(std::floor(
        static_cast<double>(config.num_points) * config.primitives[j].weight / weight_sum));
    assigned += counts[j];
  }
  for (std::size_t j = 0; assigned < config.num_points; j = (j + 1) % counts.size(), ++assigned)
    ++counts[j];

  Rng layout(derive_seed(config.seed, "scene.layout"));
  Rng sampler(derive_seed(config.seed, "scene.points"));

  PointCloud cloud;
  std::vector<std::uint32_t> labels;
  cloud.reserve(config.num_points);
  labels.reserve(config.num_points);

  for (std::size_t j = 0; j < counts.size(); ++j) {
    const Primitive &p = config.primitives[j];
    std::vector<Placement> places;
    if (p.kind != PrimitiveKind::Annulus)
      for (int c = 0; c < p.count; ++c) {
        const double r = layout.uniform(p.r_lo, p.r_hi);
        const double th = layout.uniform(p.theta_lo, p.theta_hi);
        places.push_back({r * std::cos(th), r * std::sin(th),
                          th + 0.5 * std::numbers::pi + layout.uniform(-0.2, 0.2)});
      }
    for (std::size_t i = 0; i < counts[j]; ++i) {
      Point pt;
      switch (p.kind) {
      case PrimitiveKind::Annulus: {
        const double r = sampler.uniform(p.r_lo, p.r_hi);
        const double th = sampler.uniform(p.theta_lo, p.theta_hi);
        pt = {r * std::cos(th), r * std::sin(th), sampler.uniform(p.z_lo, p.z_hi), 0.0};
        break;
      }
      case PrimitiveKind::Boxes:
        pt = sample_box_surface(p, places[sampler.index(places.size())], sampler);
        break;
      case PrimitiveKind::Poles:
        pt = sample_pole_surface(p, places[sampler.index(places.size())], sampler);
        break;
      }
      pt.intensity = std::clamp(sampler.normal(p.intensity_mean, p.intensity_sigma), 0.0, 1.0);
      // stored at the precision of the cloud file format
      pt = {to_float32(pt.x), to_float32(pt.y), to_float32(pt.z), to_float32(pt.intensity)};
      cloud.push_back(pt);
      labels.push_back(p.class_id);
    }
  }

  Rng shuffler(derive_seed(config.seed, "scene.shuffle"));
  for (std::size_t i = cloud.size(); i > 1; --i) {
    const std::size_t k = shuffler.index(i);
    std::swap(cloud[i - 1], cloud[k]);
    std::swap(labels[i - 1], labels[k]);
  }
  return {std::move(cloud), LabelVector(std::move(labels), config.num_classes)};
}

double ScorerProfile::error_probability(double radius) const {
  double extra = 0.0;
  if (!range_error.empty()) {
    if (radius <= range_error.front().first) {
      extra = range_error.front().second;
    } else if (radius >= range_error.back().first) {
      extra = range_error.back().second;
    } else {
      for (std::size_t k = 1; k < range_error.size(); ++k) {
        const auto [r0, e0] = range_error[k - 1];
        const auto [r1, e1] = range_error[k];
        if (radius <= r1) {
          extra = e0 + (e1 - e0) * (radius - r0) / (r1 - r0);
          break;
        }
      }
    }
  }
  return std::clamp(1.0 - base_accuracy + extra, 0.0, 1.0);
}

void ScorerProfile::validate(std::uint32_t num_classes) const {
  if (!(base_accuracy > 0.0 && base_accuracy <= 1.0))
    throw ConfigError("scorer base_accuracy must lie in (0, 1]");
  if (!(temperature > 0.0))
    throw ConfigError("scorer temperature must be positive");
  if (!(error_cell >= 0.0))
    throw ConfigError("scorer error_cell must be non-negative");
  if (!(margin_hi >= margin_lo && margin_lo > 0.0 && error_margin_hi >= error_margin_lo &&
        error_margin_lo > 0.0))
    throw ConfigError("scorer margins must be positive and ordered");
  for (std::size_t k = 1; k < range_error.size(); ++k)
    if (!(range_error[k].first > range_error[k - 1].first))
      throw ConfigError("scorer range_error knots must be strictly increasing in radius");
  for (const Confusion &c : confusions) {
    if (c.from >= num_classes || c.to >= num_classes)
      throw ConfigError("confusion target " + std::to_string(std::max(c.from, c.to)) +
                        " >= num_classes " + std::to_string(num_classes));
    if (!(c.probability >= 0.0 && c.probability <= 1.0))
      throw ConfigError("confusion probability outside [0, 1]");
  }
}

ScoreMatrix synthetic_scorer(const PointCloud &cloud, const LabelVector &gt,
                             const ScorerProfile &profile, std::uint64_t seed) {
  const std::uint32_t k = gt.num_classes;
  profile.validate(k);
  if (cloud.size() != gt.size())
    throw DataError("cloud and labels differ in length");
  if (k < 2)
    throw ConfigError("synthetic scorer needs at least two classes");

  ScoreMatrix out(cloud.size(), k);
  Rng rng(derive_seed(seed, "scorer"));
  std::vector<double> logits(k);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (gt.is_ignore(i)) {
      for (float &v : out.row(i))
        v = 1.0f / static_cast<float>(k);
      continue;
    }
    const std::uint32_t truth = gt[i];
    std::optional<Rng> cell_rng;
    if (profile.error_cell > 0.0) {
      // one decision per (voxel, class): errors come in spatial patches
      const Point &p = cloud[i];
      const auto cell = [&](double v) {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / profile.error_cell)));
      };
      const std::uint64_t key = mix64(mix64(mix64(cell(p.x)) + cell(p.y)) + cell(p.z)) + truth;
      cell_rng.emplace(derive_seed(seed, "scorer.cell", key));
    }
    Rng &decide = cell_rng ? *cell_rng : rng;

    std::uint32_t target = truth;
    bool confused = false;
    for (const Confusion &c : profile.confusions)
      if (c.from == truth && decide.bernoulli(c.probability)) {
        target = c.to;
        confused = true;
        break;
      }
    if (!confused && decide.bernoulli(profile.error_probability(cloud[i].radius_xy()))) {
      target = static_cast<std::uint32_t>(decide.index(k - 1));
      if (target >= truth)
        ++target;
    }

    for (double &z : logits)
      z = profile.logit_noise * rng.normal();
    const bool correct = target == truth;
    const double margin = correct ? rng.uniform(profile.margin_lo, profile.margin_hi)
                                  : rng.uniform(profile.error_margin_lo, profile.error_margin_hi);
    const bool keep_truth = !correct && rng.bernoulli(profile.runner_up);
    const double runner_frac = keep_truth ? rng.uniform() : 0.0;

    double rival = -1e300;
    for (std::uint32_t c = 0; c < k; ++c)
      if (c != target && !(keep_truth && c == truth))
        rival = std::max(rival, logits[c]);
    if (keep_truth) {
      // truth sits strictly between the rest and the wrong peak
      const double rest = k > 2 ? rival : logits[truth];
      logits[truth] = rest + runner_frac * margin;
      logits[target] = rest + margin;
    } else {
      logits[target] = rival + margin;
    }

    const double peak = logits[target];
    double sum = 0.0;
    for (double &z : logits) {
      z = std::exp((z - peak) / profile.temperature);
      sum += z;
    }
    auto row = out.row(i);
    for (std::uint32_t c = 0; c < k; ++c)
      row[c] = static_cast<float>(logits[c] / sum);
  }
  return out;
}

PointCloud augment_cloud(const PointCloud &cloud, const AugmentParams &params,
                         std::uint64_t seed) {
  if (!std::isfinite(params.scale) || !std::isfinite(params.yaw) ||
      !std::isfinite(params.jitter_sigma))
    throw DataError("augmentation parameters must be finite");
  if (!(params.scale > 0.0))
    throw DataError("augmentation scale must be positive");
  if (params.jitter_sigma < 0.0)
    throw DataError("augmentation jitter sigma must be non-negative");

  const double c = std::cos(params.yaw), s = std::sin(params.yaw);
  Rng rng(derive_seed(seed, "augment"));
  PointCloud out = cloud;
  for (Point &p : out) {
    double x = p.x * params.scale, y = p.y * params.scale, z = p.z * params.scale;
    if (params.flip_x)
      x = -x;
    if (params.flip_y)
      y = -y;
    const double rx = c * x - s * y;
    const double ry = s * x + c * y;
    x = rx;
    y = ry;
    if (params.jitter_sigma > 0.0) {
      x += params.jitter_sigma * rng.normal();
      y += params.jitter_sigma * rng.normal();
      z += params.jitter_sigma * rng.normal();
    }
    p.x = x;
    p.y = y;
    p.z = z;
  }
  return out;
}

} // namespace amv

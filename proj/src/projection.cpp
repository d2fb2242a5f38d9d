// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   projection.cpp
 * @brief  Range-view and polar BEV projection.
 */
#include "amvnet/projection.hpp"

#include "amvnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace amv {

void RVConfig::validate() const {
  if (height < 1 || width < 2)
    throw ConfigError("range image needs height >= 1 and width >= 2");
  if (mode == RvMode::Spherical && !(fov_up > fov_down))
    throw ConfigError("fov_up must exceed fov_down");
  if (mode == RvMode::Cylindrical && !(z_max > z_min))
    throw ConfigError("cylindrical z band must have z_max > z_min");
}

void BEVConfig::validate() const {
  if (r_bins < 1 || theta_bins < 1 || z_bins < 1)
    throw ConfigError("BEV bin counts must be >= 1");
  if (!(r_max > 0.0))
    throw ConfigError("BEV r_max must be positive");
  if (!(z_max > z_min))
    throw ConfigError("BEV z_max must exceed z_min");
}

namespace {

int clamp_floor(double v, int n) {
  const double f = std::floor(v);
  if (f < 0.0)
    return 0;
  if (f > n - 1)
    return n - 1;
  return static_cast<int>(f);
}

/// Keeps, per cell, the in-bounds point of minimum range; ties by index.
void elect_representatives(const PointCloud &cloud, ProjectionIndex &index) {
  index.cell_representative.assign(index.num_cells(), kEmptyCell);
  std::vector<double> best(index.num_cells(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!index.in_bounds[i])
      continue;
    const auto c = static_cast<std::size_t>(index.point_to_cell[i]);
    const double r = cloud[i].range();
    // ascending index order means strict < keeps the lowest index on ties
    if (index.cell_representative[c] == kEmptyCell || r < best[c]) {
      index.cell_representative[c] = static_cast<std::int64_t>(i);
      best[c] = r;
    }
  }
}

} // namespace

int rv_column(double yaw, int width) {
  return clamp_floor(0.5 * (1.0 - yaw / std::numbers::pi) * width, width);
}

std::int64_t rv_cell(const Point &p, const RVConfig &config) {
  const double range = p.range();
  if (!(range > 0.0))
    return kEmptyCell;
  const int col = rv_column(std::atan2(p.y, p.x), config.width);
  int row = 0;
  if (config.mode == RvMode::Spherical) {
    const double pitch = std::asin(p.z / range);
    row = clamp_floor((1.0 - (pitch - config.fov_down) / (config.fov_up - config.fov_down)) *
                          config.height,
                      config.height);
  } else {
    row = clamp_floor((1.0 - (p.z - config.z_min) / (config.z_max - config.z_min)) *
                          config.height,
                      config.height);
  }
  return static_cast<std::int64_t>(row) * config.width + col;
}

std::int64_t bev_cell(const Point &p, const BEVConfig &config, int *z_bin) {
  const double r = p.radius_xy();
  if (!(r < config.r_max) || p.z < config.z_min || !(p.z < config.z_max))
    return kEmptyCell;
  double theta = std::atan2(p.y, p.x);
  if (theta < 0.0)
    theta += 2.0 * std::numbers::pi;
  const int r_bin = std::min(static_cast<int>(std::floor(r * config.r_bins / config.r_max)),
                             config.r_bins - 1);
  const int t_bin =
      std::min(static_cast<int>(std::floor(theta * config.theta_bins / (2.0 * std::numbers::pi))),
               config.theta_bins - 1);
  if (z_bin)
    *z_bin = std::min(static_cast<int>(std::floor((p.z - config.z_min) * config.z_bins /
                                                  (config.z_max - config.z_min))),
                      config.z_bins - 1);
  return static_cast<std::int64_t>(r_bin) * config.theta_bins + t_bin;
}

RvProjection project_rv(const PointCloud &cloud, const RVConfig &config) {
  config.validate();
  if (cloud.empty())
    throw DataError("cannot project an empty cloud");

  RvProjection out;
  ProjectionIndex &index = out.index;
  index.grid_rows = config.height;
  index.grid_cols = config.width;
  index.point_to_cell.resize(cloud.size());
  index.in_bounds.resize(cloud.size());
  bool any = false;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    index.point_to_cell[i] = rv_cell(cloud[i], config);
    index.in_bounds[i] = index.point_to_cell[i] != kEmptyCell;
    any = any || index.in_bounds[i];
  }
  if (!any)
    throw DataError("all points out of bounds: range image would be empty");
  elect_representatives(cloud, index);

  RangeImage &img = out.image;
  img.height = config.height;
  img.width = config.width;
  img.data.assign(index.num_cells() * RangeImage::kChannels, 0.0f);
  for (std::size_t c = 0; c < index.num_cells(); ++c) {
    const std::int64_t rep = index.cell_representative[c];
    if (rep == kEmptyCell)
      continue;
    const Point &p = cloud[static_cast<std::size_t>(rep)];
    float *px = img.data.data() + c * RangeImage::kChannels;
    px[0] = static_cast<float>(p.x);
    px[1] = static_cast<float>(p.y);
    px[2] = static_cast<float>(p.z);
    px[3] = static_cast<float>(p.intensity);
    px[4] = static_cast<float>(p.range());
    px[5] = 1.0f;
  }
  return out;
}

ProjectionIndex project_bev(const PointCloud &cloud, const BEVConfig &config) {
  config.validate();
  if (cloud.empty())
    throw DataError("cannot project an empty cloud");
  ProjectionIndex index;
  index.grid_rows = config.r_bins;
  index.grid_cols = config.theta_bins;
  index.point_to_cell.resize(cloud.size());
  index.in_bounds.resize(cloud.size());
  index.z_bin.assign(cloud.size(), -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    index.point_to_cell[i] = bev_cell(cloud[i], config, &index.z_bin[i]);
    index.in_bounds[i] = index.point_to_cell[i] != kEmptyCell;
  }
  elect_representatives(cloud, index);
  return index;
}

ScoreMatrix gather_cell_scores_to_points(const ScoreMatrix &cell_scores,
                                         const ProjectionIndex &index) {
  if (cell_scores.rows() != index.num_cells())
    throw DataError("cell score rows (" + std::to_string(cell_scores.rows()) +
                    ") do not match grid cells (" + std::to_string(index.num_cells()) + ")");
  const std::size_t k = cell_scores.cols();
  ScoreMatrix out = ScoreMatrix::uniform(index.point_to_cell.size(), k);
  for (std::size_t i = 0; i < index.point_to_cell.size(); ++i) {
    if (!index.in_bounds[i])
      continue;
    const auto src = cell_scores.row(static_cast<std::size_t>(index.point_to_cell[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

ScoreMatrix scatter_point_scores_to_cells(const ScoreMatrix &point_scores,
                                          const ProjectionIndex &index) {
  if (point_scores.rows() != index.point_to_cell.size())
    throw DataError("point score rows do not match projected points");
  ScoreMatrix out = ScoreMatrix::uniform(index.num_cells(), point_scores.cols());
  for (std::size_t c = 0; c < index.num_cells(); ++c) {
    const std::int64_t rep = index.cell_representative[c];
    if (rep == kEmptyCell)
      continue;
    const auto src = point_scores.row(static_cast<std::size_t>(rep));
    std::copy(src.begin(), src.end(), out.row(c).begin());
  }
  return out;
}

Bytes write_range_image(const RangeImage &image) {
  Bytes out{'A', 'M', 'V', 'I'};
  le::put_u32(out, static_cast<std::uint32_t>(image.height));
  le::put_u32(out, static_cast<std::uint32_t>(image.width));
  le::put_u32(out, RangeImage::kChannels);
  for (float v : image.data)
    le::put_f32(out, v);
  return out;
}

RangeImage read_range_image(ByteView bytes) {
  if (bytes.size() < 16 || bytes[0] != 'A' || bytes[1] != 'M' || bytes[2] != 'V' ||
      bytes[3] != 'I')
    throw DataError("bad magic: not an AMVI range image");
  RangeImage img;
  img.height = static_cast<int>(le::get_u32(bytes, 4));
  img.width = static_cast<int>(le::get_u32(bytes, 8));
  const std::uint32_t channels = le::get_u32(bytes, 12);
  if (channels != RangeImage::kChannels)
    throw DataError("range image must have 6 channels");
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width * channels;
  if (bytes.size() != 16 + n * 4)
    throw DataError("range image payload length mismatch");
  img.data.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    img.data[i] = le::get_f32(bytes, 16 + i * 4);
  return img;
}

} // namespace amv

// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   projection.hpp
 * @brief  Range-view and polar bird's-eye-view indexing of point clouds.
 */
#pragma once

#include "amvnet/io.hpp"
#include "amvnet/types.hpp"

#include <cstdint>
#include <vector>

namespace amv {

enum class RvMode { Spherical, Cylindrical };

struct RVConfig {
  int height = 64;
  int width = 2048;
  RvMode mode = RvMode::Spherical;
  double fov_up = 3.0 * 3.14159265358979323846 / 180.0;
  double fov_down = -25.0 * 3.14159265358979323846 / 180.0;
  double z_min = -3.0; ///< cylindrical row band
  double z_max = 1.5;

  void validate() const;
};

struct BEVConfig {
  int r_bins = 480;
  int theta_bins = 360;
  int z_bins = 32;
  double r_max = 50.0;
  double z_min = -3.0;
  double z_max = 1.5;

  void validate() const;
};

inline constexpr std::int64_t kEmptyCell = -1;

/**
 * Point <-> cell association for one grid. Cells are flattened row-major:
 * (row, col) for range images, (r_bin, theta_bin) for BEV pillars.
 */
struct ProjectionIndex {
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<std::int64_t> point_to_cell; ///< kEmptyCell when out of bounds
  std::vector<bool> in_bounds;
  std::vector<std::int64_t> cell_representative; ///< point index or kEmptyCell
  std::vector<int> z_bin;                        ///< BEV only, -1 when out of bounds

  std::size_t num_cells() const {
    return static_cast<std::size_t>(grid_rows) * static_cast<std::size_t>(grid_cols);
  }
};

/// H x W x 6 image; channels x, y, z, intensity, range, mask.
struct RangeImage {
  static constexpr int kChannels = 6;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  float at(int row, int col, int channel) const {
    return data[(static_cast<std::size_t>(row) * width + col) * kChannels + channel];
  }
};

/// Column of a given yaw angle in a W-wide image; yaw 0 maps to W/2.
int rv_column(double yaw, int width);

/// Cell of a single point, or nullopt-equivalent -1 when out of bounds.
std::int64_t rv_cell(const Point &p, const RVConfig &config);
std::int64_t bev_cell(const Point &p, const BEVConfig &config, int *z_bin = nullptr);

struct RvProjection {
  ProjectionIndex index;
  RangeImage image;
};

RvProjection project_rv(const PointCloud &cloud, const RVConfig &config);
ProjectionIndex project_bev(const PointCloud &cloud, const BEVConfig &config);

/// Each in-bounds point takes its cell's row; out-of-bounds points get 1/K.
ScoreMatrix gather_cell_scores_to_points(const ScoreMatrix &cell_scores,
                                         const ProjectionIndex &index);

/// Each non-empty cell takes its representative point's row; empty cells 1/K.
ScoreMatrix scatter_point_scores_to_cells(const ScoreMatrix &point_scores,
                                          const ProjectionIndex &index);

/// "AMVI" | u32 H | u32 W | u32 C | H*W*C float32, all little-endian.
Bytes write_range_image(const RangeImage &image);
RangeImage read_range_image(ByteView bytes);

} // namespace amv

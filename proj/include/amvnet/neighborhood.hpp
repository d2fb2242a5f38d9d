// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   neighborhood.hpp
 * @brief  Exact k-nearest-neighbour search and point-head feature assembly.
 */
#pragma once

#include "amvnet/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace amv {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

/// Squared Euclidean distance over (x, y, z). Both search paths use this so
/// tie decisions agree bit for bit.
inline double squared_distance(const Point &a, const Point &b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/**
 * Static kd-tree over the xyz coordinates of a cloud. Splits on the axis of
 * largest extent at the median (ties by index). Results are sorted by
 * (distance, index). The tree keeps a copy of the coordinates and is
 * immutable after construction.
 */
class KdTree {
public:
  explicit KdTree(const PointCloud &cloud, std::size_t leaf_size = 8);

  std::size_t size() const { return points_.size(); }

  /// n nearest points to cloud[query_index], itself included.
  std::vector<Neighbor> knn(std::size_t query_index, std::size_t n) const;
  /// n nearest points to an arbitrary location.
  std::vector<Neighbor> knn(const Point &query, std::size_t n) const;

private:
  struct Node {
    std::uint32_t begin = 0, end = 0; ///< range into order_ (leaves)
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  double coord(std::size_t i, int axis) const;

  PointCloud points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

KdTree build_kdtree(const PointCloud &cloud);

/// Exhaustive search with the same ordering rules as KdTree::knn.
std::vector<Neighbor> brute_force_knn(const PointCloud &cloud, std::size_t query_index,
                                      std::size_t n);

/// Encoding of the relative position phi between query and neighbour.
enum class PhiMode {
  OffsetAndNorm, ///< (dx, dy, dz, |d|)
  NormOnly,      ///< (|d|)
};

constexpr std::size_t phi_width(PhiMode mode) { return mode == PhiMode::OffsetAndNorm ? 4 : 1; }

/// [f_i | g_i | x y z intensity], length 2K + 4.
Eigen::VectorXd assemble_point_features(std::size_t i, const ScoreMatrix &f,
                                        const ScoreMatrix &g, const PointCloud &cloud);

/// One row per neighbour: [f_k | g_k | phi(x_i, x_k)].
Eigen::MatrixXd assemble_set_features(std::size_t i, const std::vector<Neighbor> &neighbors,
                                      const ScoreMatrix &f, const ScoreMatrix &g,
                                      const PointCloud &cloud,
                                      PhiMode mode = PhiMode::OffsetAndNorm);

} // namespace amv

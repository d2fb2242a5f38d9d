// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   test_util.hpp
 * @brief  Random generators and small helpers shared by the unit tests.
 */
#pragma once

#include "amvnet/io.hpp"
#include "amvnet/types.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace amv::test {

using Gen = std::mt19937_64;

inline double uniform(Gen &gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline std::size_t uniform_index(Gen &gen, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

inline PointCloud random_cloud(Gen &gen, std::size_t n, double extent = 20.0) {
  PointCloud cloud(n);
  for (Point &p : cloud) {
    p.x = uniform(gen, -extent, extent);
    p.y = uniform(gen, -extent, extent);
    p.z = uniform(gen, -3.0, 1.5);
    p.intensity = uniform(gen, 0.0, 1.0);
  }
  return cloud;
}

/// Cloud on a coarse integer lattice so that exact distance ties are common.
inline PointCloud lattice_cloud(Gen &gen, std::size_t n, int extent = 4) {
  PointCloud cloud(n);
  for (Point &p : cloud) {
    p.x = static_cast<double>(static_cast<int>(uniform_index(gen, 0, 2 * extent)) - extent);
    p.y = static_cast<double>(static_cast<int>(uniform_index(gen, 0, 2 * extent)) - extent);
    p.z = static_cast<double>(static_cast<int>(uniform_index(gen, 0, 2)) - 1);
  }
  return cloud;
}

/// Normalized rows with strictly positive entries.
inline ScoreMatrix random_scores(Gen &gen, std::size_t n, std::size_t k) {
  ScoreMatrix s(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    std::vector<double> row(k);
    for (double &v : row) {
      v = uniform(gen, 0.01, 1.0);
      sum += v;
    }
    for (std::size_t c = 0; c < k; ++c)
      s(i, c) = static_cast<float>(row[c] / sum);
  }
  return s;
}

inline LabelVector random_labels(Gen &gen, std::size_t n, std::uint32_t k) {
  LabelVector l(n, k, 0);
  for (std::size_t i = 0; i < n; ++i)
    l[i] = static_cast<std::uint32_t>(uniform_index(gen, 0, k - 1));
  return l;
}

inline Eigen::MatrixXd random_matrix(Gen &gen, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = uniform(gen, -scale, scale);
  return m;
}

/// Concatenation of parameter blocks into one vector.
inline Eigen::VectorXd flatten(const std::vector<std::span<double>> &blocks) {
  std::size_t total = 0;
  for (const auto &b : blocks)
    total += b.size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(total));
  Eigen::Index at = 0;
  for (const auto &b : blocks)
    for (double x : b)
      v[at++] = x;
  return v;
}

inline Eigen::VectorXd flatten(const std::vector<std::span<const double>> &blocks) {
  std::size_t total = 0;
  for (const auto &b : blocks)
    total += b.size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(total));
  Eigen::Index at = 0;
  for (const auto &b : blocks)
    for (double x : b)
      v[at++] = x;
  return v;
}

inline void unflatten(const Eigen::VectorXd &v, const std::vector<std::span<double>> &blocks) {
  Eigen::Index at = 0;
  for (const auto &b : blocks)
    for (double &x : b)
      x = v[at++];
}

inline Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string text_of(const Bytes &b) { return std::string(b.begin(), b.end()); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / ("amvnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace amv::test

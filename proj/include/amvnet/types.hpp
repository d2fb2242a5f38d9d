// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   types.hpp
 * @brief  Core data containers: point clouds, labels and score matrices.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace amv {

/// One LiDAR return. Coordinates in meters, intensity is unitless.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  double range() const { return std::sqrt(x * x + y * y + z * z); }
  double radius_xy() const { return std::sqrt(x * x + y * y); }

  friend bool operator==(const Point &, const Point &) = default;
};

/// Ordered point set. Indices are point identities across the pipeline.
using PointCloud = std::vector<Point>;

/**
 * Per-point class ids. The ignore sentinel is the value num_classes, one past
 * the last valid class.
 */
struct LabelVector {
  std::vector<std::uint32_t> labels;
  std::uint32_t num_classes = 0;

  LabelVector() = default;
  LabelVector(std::size_t n, std::uint32_t k, std::uint32_t fill)
      : labels(n, fill), num_classes(k) {}
  LabelVector(std::vector<std::uint32_t> l, std::uint32_t k)
      : labels(std::move(l)), num_classes(k) {}

  std::uint32_t ignore() const { return num_classes; }
  bool is_ignore(std::size_t i) const { return labels[i] == num_classes; }
  std::size_t size() const { return labels.size(); }
  std::uint32_t operator[](std::size_t i) const { return labels[i]; }
  std::uint32_t &operator[](std::size_t i) { return labels[i]; }

  friend bool operator==(const LabelVector &, const LabelVector &) = default;
};

/**
 * N x K row-major class scores. Storage is float32, matching the exchange
 * format; arithmetic on rows is done in double by callers.
 */
class ScoreMatrix {
public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Matrix where every row is the uniform distribution 1/K.
  static ScoreMatrix uniform(std::size_t rows, std::size_t cols) {
    return ScoreMatrix(rows, cols, 1.0f / static_cast<float>(cols));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  float operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  float &operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }

  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<float> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<float> &data() const { return data_; }
  std::vector<float> &data() { return data_; }

  friend bool operator==(const ScoreMatrix &, const ScoreMatrix &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Index of the largest entry; ties go to the lowest index.
template <typename T> std::size_t argmax(std::span<const T> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best])
      best = i;
  return best;
}

/// Row-wise argmax of a score matrix, as a label vector with K classes.
LabelVector argmax_labels(const ScoreMatrix &scores);

} // namespace amv

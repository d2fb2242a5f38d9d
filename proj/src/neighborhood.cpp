// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   neighborhood.cpp
 * @brief  kd-tree, brute-force oracle and feature assembly.
 */
#include "amvnet/neighborhood.hpp"

#include "amvnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace amv {

namespace {

struct Candidate {
  double d2;
  std::size_t index;
  bool operator<(const Candidate &o) const {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

std::vector<Neighbor> finish(std::vector<Candidate> c) {
  std::sort(c.begin(), c.end());
  std::vector<Neighbor> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k)
    out[k] = {c[k].index, std::sqrt(c[k].d2)};
  return out;
}

} // namespace

KdTree::KdTree(const PointCloud &cloud, std::size_t leaf_size)
    : points_(cloud), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (cloud.empty())
    throw DataError("cannot build a kd-tree over an empty cloud");
  if (cloud.size() > 0xFFFFFFFFu)
    throw DataError("cloud too large for kd-tree indices");
  order_.resize(cloud.size());
  for (std::size_t i = 0; i < order_.size(); ++i)
    order_[i] = static_cast<std::uint32_t>(i);
  nodes_.reserve(2 * cloud.size() / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(order_.size()));
}

double KdTree::coord(std::size_t i, int axis) const {
  const Point &p = points_[i];
  return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= leaf_size_)
    return id;

  std::array<double, 3> lo{}, hi{};
  lo.fill(INFINITY);
  hi.fill(-INFINITY);
  for (std::uint32_t k = begin; k < end; ++k)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], coord(order_[k], a));
      hi[a] = std::max(hi[a], coord(order_[k], a));
    }
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (hi[a] - lo[a] > hi[axis] - lo[axis])
      axis = a;

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = coord(a, axis), cb = coord(b, axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = coord(order_[mid], axis);
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node &node = nodes_[static_cast<std::size_t>(id)];
  node.axis = static_cast<std::uint8_t>(axis);
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(std::size_t query_index, std::size_t n) const {
  if (query_index >= points_.size())
    throw std::out_of_range("knn: query index " + std::to_string(query_index) +
                            " out of range");
  return knn(points_[query_index], n);
}

std::vector<Neighbor> KdTree::knn(const Point &query, std::size_t n) const {
  if (n == 0 || n > points_.size())
    throw std::invalid_argument("knn: need 1 <= n <= N (n=" + std::to_string(n) +
                                ", N=" + std::to_string(points_.size()) + ")");
  // max-heap on (d2, index): top is the current worst kept candidate
  std::priority_queue<Candidate> heap;
  const auto offer = [&](std::size_t i) {
    const Candidate c{squared_distance(query, points_[i]), i};
    if (heap.size() < n) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  };

  struct Pending {
    std::int32_t node;
    double plane_d2;
  };
  std::vector<Pending> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Pending top = stack.back();
    stack.pop_back();
    // a point exactly on the bound may still win its tie on index
    if (heap.size() == n && top.plane_d2 > heap.top().d2)
      continue;
    const Node &node = nodes_[static_cast<std::size_t>(top.node)];
    if (node.left < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k)
        offer(order_[k]);
      continue;
    }
    const double q = node.axis == 0 ? query.x : node.axis == 1 ? query.y : query.z;
    const double delta = q - node.split;
    const std::int32_t near = delta < 0.0 ? node.left : node.right;
    const std::int32_t far = delta < 0.0 ? node.right : node.left;
    stack.push_back({far, std::max(top.plane_d2, delta * delta)});
    stack.push_back({near, top.plane_d2});
  }

  std::vector<Candidate> found;
  found.reserve(n);
  while (!heap.empty()) {
    found.push_back(heap.top());
    heap.pop();
  }
  return finish(std::move(found));
}

KdTree build_kdtree(const PointCloud &cloud) { return KdTree(cloud); }

std::vector<Neighbor> brute_force_knn(const PointCloud &cloud, std::size_t query_index,
                                      std::size_t n) {
  if (query_index >= cloud.size())
    throw std::out_of_range("brute_force_knn: query index out of range");
  if (n == 0 || n > cloud.size())
    throw std::invalid_argument("brute_force_knn: need 1 <= n <= N");
  std::vector<Candidate> all(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    all[i] = {squared_distance(cloud[query_index], cloud[i]), i};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end());
  all.resize(n);
  return finish(std::move(all));
}

Eigen::VectorXd assemble_point_features(std::size_t i, const ScoreMatrix &f,
                                        const ScoreMatrix &g, const PointCloud &cloud) {
  if (i >= cloud.size() || i >= f.rows() || i >= g.rows())
    throw std::out_of_range("assemble_point_features: index " + std::to_string(i) +
                            " out of range");
  const std::size_t k = f.cols();
  Eigen::VectorXd p(2 * k + 4);
  for (std::size_t c = 0; c < k; ++c) {
    p[static_cast<Eigen::Index>(c)] = f(i, c);
    p[static_cast<Eigen::Index>(k + c)] = g(i, c);
  }
  const Point &x = cloud[i];
  const auto base = static_cast<Eigen::Index>(2 * k);
  p[base] = x.x;
  p[base + 1] = x.y;
  p[base + 2] = x.z;
  p[base + 3] = x.intensity;
  return p;
}

Eigen::MatrixXd assemble_set_features(std::size_t i, const std::vector<Neighbor> &neighbors,
                                      const ScoreMatrix &f, const ScoreMatrix &g,
                                      const PointCloud &cloud, PhiMode mode) {
  if (i >= cloud.size())
    throw std::out_of_range("assemble_set_features: query index out of range");
  const std::size_t k = f.cols();
  const auto base = static_cast<Eigen::Index>(2 * k);
  Eigen::MatrixXd s(static_cast<Eigen::Index>(neighbors.size()),
                    static_cast<Eigen::Index>(2 * k + phi_width(mode)));
  const Point &q = cloud[i];
  for (std::size_t r = 0; r < neighbors.size(); ++r) {
    const std::size_t j = neighbors[r].index;
    if (j >= cloud.size() || j >= f.rows() || j >= g.rows())
      throw std::out_of_range("assemble_set_features: neighbour index " + std::to_string(j) +
                              " out of range");
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t c = 0; c < k; ++c) {
      s(row, static_cast<Eigen::Index>(c)) = f(j, c);
      s(row, static_cast<Eigen::Index>(k + c)) = g(j, c);
    }
    const Point &x = cloud[j];
    const double dx = x.x - q.x, dy = x.y - q.y, dz = x.z - q.z;
    const double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (mode == PhiMode::OffsetAndNorm) {
      s(row, base) = dx;
      s(row, base + 1) = dy;
      s(row, base + 2) = dz;
      s(row, base + 3) = norm;
    } else {
      s(row, base) = norm;
    }
  }
  return s;
}

} // namespace amv

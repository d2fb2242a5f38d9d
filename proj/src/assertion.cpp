// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   assertion.cpp
 * @brief  Cosine-similarity assertion, histograms and batch sampling.
 */
#include "amvnet/assertion.hpp"

#include "amvnet/error.hpp"
#include "amvnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace amv {

std::size_t UncertaintyMask::count() const {
  return static_cast<std::size_t>(std::count(uncertain.begin(), uncertain.end(), true));
}

double UncertaintyMask::fraction() const {
  return uncertain.empty() ? 0.0
                           : static_cast<double>(count()) / static_cast<double>(size());
}

std::vector<std::size_t> UncertaintyMask::uncertain_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < uncertain.size(); ++i)
    if (uncertain[i])
      out.push_back(i);
  return out;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> f, std::span<const T> g) {
  if (f.size() != g.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double dot = 0.0, ff = 0.0, gg = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double a = f[k], b = g[k];
    if (a < 0.0 || b < 0.0)
      throw std::invalid_argument("cosine_similarity: negative entry");
    dot += a * b;
    ff += a * a;
    gg += b * b;
  }
  if (ff == 0.0 || gg == 0.0)
    return 0.0;
  return std::clamp(dot / (std::sqrt(ff) * std::sqrt(gg)), 0.0, 1.0);
}

} // namespace

double cosine_similarity(std::span<const double> f, std::span<const double> g) {
  return cosine_impl(f, g);
}

double cosine_similarity(std::span<const float> f, std::span<const float> g) {
  return cosine_impl(f, g);
}

UncertaintyMask uncertainty_mask(const ScoreMatrix &f, const ScoreMatrix &g, double tau) {
  if (f.rows() != g.rows() || f.cols() != g.cols())
    throw DataError("uncertainty_mask: score matrices differ in shape");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::invalid_argument("uncertainty_mask: tau must lie in [0, 1]");
  UncertaintyMask m;
  m.tau = tau;
  m.similarity.resize(f.rows());
  m.uncertain.resize(f.rows());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    m.similarity[i] = cosine_similarity(f.row(i), g.row(i));
    m.uncertain[i] = m.similarity[i] <= tau;
  }
  return m;
}

UncertaintyMask rethreshold(const UncertaintyMask &mask, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::invalid_argument("rethreshold: tau must lie in [0, 1]");
  UncertaintyMask m;
  m.tau = tau;
  m.similarity = mask.similarity;
  m.uncertain.resize(m.similarity.size());
  for (std::size_t i = 0; i < m.similarity.size(); ++i)
    m.uncertain[i] = m.similarity[i] <= tau;
  return m;
}

std::vector<HistogramBin> similarity_histogram(const UncertaintyMask &mask, int num_bins) {
  if (num_bins < 1)
    throw std::invalid_argument("similarity_histogram: num_bins must be >= 1");
  std::vector<HistogramBin> bins(static_cast<std::size_t>(num_bins));
  const double n = num_bins;
  for (int j = 0; j < num_bins; ++j) {
    bins[j].lo = j / n;
    bins[j].hi = (j + 1) / n;
  }
  for (double s : mask.similarity) {
    int j = static_cast<int>(std::ceil(s * n)) - 1;
    j = std::clamp(j, 0, num_bins - 1);
    // settle rounding at the edges against the stored bin bounds
    while (j > 0 && s <= bins[j].lo)
      --j;
    while (j < num_bins - 1 && s > bins[j].hi)
      ++j;
    ++bins[j].count;
  }
  return bins;
}

std::string histogram_csv(const std::vector<HistogramBin> &bins) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (const HistogramBin &b : bins)
    out += fmt::format("{:.6f},{:.6f},{}\n", b.lo, b.hi, b.count);
  return out;
}

std::vector<std::size_t> sample_training_batch(const UncertaintyMask &mask,
                                               std::size_t batch_size, std::uint64_t seed,
                                               const std::vector<bool> *eligible) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.uncertain[i] && (!eligible || (*eligible)[i]))
      pool.push_back(i);
  if (pool.empty())
    throw DataError("sample_training_batch: no uncertain points to sample");

  Rng rng(derive_seed(seed, "batch"));
  std::vector<std::size_t> batch;
  batch.reserve(batch_size);
  const std::size_t take = std::min(batch_size, pool.size());
  // partial Fisher-Yates
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t k = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[k]);
    batch.push_back(pool[i]);
  }
  while (batch.size() < batch_size)
    batch.push_back(pool[rng.index(pool.size())]);
  return batch;
}

} // namespace amv

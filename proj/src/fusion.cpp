// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   fusion.cpp
 */
#include "amvnet/fusion.hpp"

#include "amvnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace amv {

namespace {

template <typename Op>
ScoreMatrix combine_rows(const ScoreMatrix &f, const ScoreMatrix &g, Op op) {
  if (f.rows() != g.rows() || f.cols() != g.cols())
    throw DataError("combiner: score matrices differ in shape");
  ScoreMatrix out(f.rows(), f.cols());
  std::vector<double> row(f.cols());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < f.cols(); ++c) {
      row[c] = op(static_cast<double>(f(i, c)), static_cast<double>(g(i, c)));
      sum += row[c];
    }
    auto dst = out.row(i);
    for (std::size_t c = 0; c < f.cols(); ++c)
      dst[c] = sum > 0.0 ? static_cast<float>(row[c] / sum)
                         : 1.0f / static_cast<float>(f.cols());
  }
  return out;
}

} // namespace

ScoreMatrix combine_geometric(const ScoreMatrix &f, const ScoreMatrix &g) {
  return combine_rows(f, g, [](double a, double b) { return std::sqrt(a * b); });
}

ScoreMatrix combine_arithmetic(const ScoreMatrix &f, const ScoreMatrix &g) {
  return combine_rows(f, g, [](double a, double b) { return 0.5 * (a + b); });
}

ScoreMatrix combine_max(const ScoreMatrix &f, const ScoreMatrix &g) {
  return combine_rows(f, g, [](double a, double b) { return std::max(a, b); });
}

ScoreMatrix combine(Combiner which, const ScoreMatrix &f, const ScoreMatrix &g) {
  switch (which) {
  case Combiner::Geometric:
    return combine_geometric(f, g);
  case Combiner::Arithmetic:
    return combine_arithmetic(f, g);
  case Combiner::Max:
    return combine_max(f, g);
  }
  throw std::invalid_argument("unknown combiner");
}

Combiner parse_combiner(std::string_view name) {
  if (name == "geometric")
    return Combiner::Geometric;
  if (name == "arithmetic")
    return Combiner::Arithmetic;
  if (name == "max")
    return Combiner::Max;
  throw ConfigError("unknown combiner \"" + std::string(name) + "\"");
}

FusionResult assemble_fusion(const ScoreMatrix &f, const ScoreMatrix &g, UncertaintyMask mask,
                             const std::vector<std::uint32_t> &head_labels) {
  if (mask.size() != f.rows())
    throw DataError("fusion: mask length does not match scores");
  if (head_labels.size() != mask.count())
    throw DataError("fusion: head label count does not match uncertain points");
  FusionResult out;
  out.combined_scores = combine_geometric(f, g);
  out.labels = argmax_labels(*out.combined_scores);
  out.source.assign(f.rows(), LabelSource::Ensemble);
  std::size_t next = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.uncertain[i]) {
      if (head_labels[next] >= f.cols())
        throw DataError("fusion: head label out of range");
      out.labels[i] = head_labels[next++];
      out.source[i] = LabelSource::Head;
    }
  out.mask = std::move(mask);
  return out;
}

FusionResult fuse_predictions(const PointCloud &cloud, const ScoreMatrix &f,
                              const ScoreMatrix &g, double tau, const PointHeadModel &model,
                              const KdTree *tree) {
  if (cloud.size() != f.rows())
    throw DataError("fusion: cloud and scores differ in length");
  if (f.cols() != model.num_classes)
    throw DataError("fusion: model classes do not match score width");
  UncertaintyMask mask = uncertainty_mask(f, g, tau);
  const auto head = predict_uncertain(model, cloud, f, g, mask, tree);
  return assemble_fusion(f, g, std::move(mask), head);
}

Bytes write_source_tags(const std::vector<LabelSource> &source) {
  Bytes out(source.size());
  std::transform(source.begin(), source.end(), out.begin(),
                 [](LabelSource s) { return static_cast<std::uint8_t>(s); });
  return out;
}

} // namespace amv

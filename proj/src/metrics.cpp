// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   metrics.cpp
 */
#include "amvnet/metrics.hpp"

#include "amvnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace amv {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (std::uint64_t c : counts)
    t += c;
  return t;
}

ConfusionMatrix &ConfusionMatrix::operator+=(const ConfusionMatrix &o) {
  if (o.num_classes != num_classes)
    throw DataError("cannot add confusion matrices of different class counts");
  for (std::size_t i = 0; i < counts.size(); ++i)
    counts[i] += o.counts[i];
  ignored += o.ignored;
  return *this;
}

ConfusionMatrix confusion_matrix(const LabelVector &pred, const LabelVector &gt,
                                 std::uint32_t num_classes) {
  if (pred.size() != gt.size())
    throw DataError("confusion_matrix: prediction and ground truth lengths differ (" +
                    std::to_string(pred.size()) + " vs " + std::to_string(gt.size()) + ")");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.is_ignore(i)) {
      ++cm.ignored;
      continue;
    }
    if (gt[i] >= num_classes || pred[i] >= num_classes)
      throw DataError("confusion_matrix: label >= K at point " + std::to_string(i));
    ++cm.counts[std::size_t{gt[i]} * num_classes + pred[i]];
  }
  return cm;
}

std::vector<double> class_iou(const ConfusionMatrix &cm) {
  const std::uint32_t k = cm.num_classes;
  std::vector<double> iou(k, std::numeric_limits<double>::quiet_NaN());
  for (std::uint32_t c = 0; c < k; ++c) {
    std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
    for (std::uint32_t o = 0; o < k; ++o)
      if (o != c) {
        fp += cm.at(o, c);
        fn += cm.at(c, o);
      }
    const std::uint64_t denom = tp + fp + fn;
    if (denom > 0)
      iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  return iou;
}

double miou(const ConfusionMatrix &cm) {
  if (cm.total() == 0)
    throw DataError("no evaluated points");
  double sum = 0.0;
  int present = 0;
  for (double v : class_iou(cm))
    if (!std::isnan(v)) {
      sum += v;
      ++present;
    }
  return sum / present;
}

double fw_iou(const ConfusionMatrix &cm) {
  const std::uint64_t total = cm.total();
  if (total == 0)
    throw DataError("no evaluated points");
  const auto iou = class_iou(cm);
  double acc = 0.0;
  for (std::uint32_t c = 0; c < cm.num_classes; ++c) {
    std::uint64_t gt = 0;
    for (std::uint32_t p = 0; p < cm.num_classes; ++p)
      gt += cm.at(c, p);
    if (gt > 0)
      acc += static_cast<double>(gt) / static_cast<double>(total) * iou[c];
  }
  return acc;
}

StratifiedMetrics stratified_confusion(const LabelVector &pred, const LabelVector &gt,
                                       const PointCloud &cloud, const std::vector<double> &edges) {
  if (edges.size() < 2)
    throw DataError("stratification needs at least two bin edges");
  for (std::size_t j = 1; j < edges.size(); ++j)
    if (!(edges[j] > edges[j - 1]))
      throw DataError("stratification bin edges must be strictly ascending");
  if (pred.size() != gt.size() || gt.size() != cloud.size())
    throw DataError("stratification: prediction, ground truth and cloud lengths differ");

  const std::uint32_t k = gt.num_classes;
  StratifiedMetrics out;
  out.dropped = ConfusionMatrix(k);
  for (std::size_t j = 0; j + 1 < edges.size(); ++j)
    out.strata.push_back({edges[j], edges[j + 1], ConfusionMatrix(k)});

  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double r = cloud[i].radius_xy();
    ConfusionMatrix *cm = &out.dropped;
    if (r >= edges.front() && r < edges.back()) {
      const auto it = std::upper_bound(edges.begin(), edges.end(), r);
      cm = &out.strata[static_cast<std::size_t>(it - edges.begin()) - 1].cm;
    }
    if (gt.is_ignore(i)) {
      ++cm->ignored;
      continue;
    }
    if (gt[i] >= k || pred[i] >= k)
      throw DataError("stratification: label >= K at point " + std::to_string(i));
    ++cm->counts[std::size_t{gt[i]} * k + pred[i]];
  }
  return out;
}

void accumulate(StratifiedMetrics &into, const StratifiedMetrics &scan) {
  if (into.strata.empty()) {
    into = scan;
    return;
  }
  if (into.strata.size() != scan.strata.size())
    throw DataError("cannot merge stratifications with different edges");
  for (std::size_t j = 0; j < into.strata.size(); ++j)
    into.strata[j].cm += scan.strata[j].cm;
  into.dropped += scan.dropped;
}

std::vector<double> stratified_miou(const LabelVector &pred, const LabelVector &gt,
                                    const PointCloud &cloud, const std::vector<double> &edges) {
  const auto m = stratified_confusion(pred, gt, cloud, edges);
  std::vector<double> out;
  for (const Stratum &s : m.strata)
    out.push_back(s.cm.total() == 0 ? std::numeric_limits<double>::quiet_NaN() : miou(s.cm));
  return out;
}

std::string metrics_csv(const ConfusionMatrix &cm) {
  std::string out = "class,iou\n";
  const auto iou = class_iou(cm);
  for (std::uint32_t c = 0; c < cm.num_classes; ++c)
    out += std::isnan(iou[c]) ? fmt::format("{},nan\n", c) : fmt::format("{},{:.6f}\n", c, iou[c]);
  out += fmt::format("miou,{:.6f}\n", miou(cm));
  out += fmt::format("fw_iou,{:.6f}\n", fw_iou(cm));
  return out;
}

std::string strata_csv(const StratifiedMetrics &m) {
  std::string out = "r_lo,r_hi,miou\n";
  for (const Stratum &s : m.strata) {
    if (s.cm.total() == 0)
      out += fmt::format("{:g},{:g},nan\n", s.lo, s.hi);
    else
      out += fmt::format("{:g},{:g},{:.6f}\n", s.lo, s.hi, miou(s.cm));
  }
  return out;
}

} // namespace amv

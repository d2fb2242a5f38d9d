// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   test_metrics.cpp
 * @brief  Confusion matrices, IoU scores and range-stratified metrics.
 */
#include "amvnet/error.hpp"
#include "amvnet/metrics.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace amv;

namespace {

/// mIoU straight from label pairs: |pred=c and gt=c| / |pred=c or gt=c|,
/// averaged over classes where the union is non-empty.
double miou_oracle(const LabelVector &pred, const LabelVector &gt) {
  double sum = 0.0;
  int present = 0;
  for (std::uint32_t c = 0; c < gt.num_classes; ++c) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt.is_ignore(i))
        continue;
      inter += pred[i] == c && gt[i] == c;
      uni += pred[i] == c || gt[i] == c;
    }
    if (uni > 0) {
      sum += static_cast<double>(inter) / static_cast<double>(uni);
      ++present;
    }
  }
  return sum / present;
}

LabelVector labels(std::vector<std::uint32_t> v, std::uint32_t k) { return {std::move(v), k}; }

} // namespace

TEST(Confusion, TwoClassExample) {
  ConfusionMatrix cm = confusion_matrix(labels({0, 0, 1}, 2), labels({0, 1, 1}, 2), 2);
  EXPECT_EQ(cm.counts, (std::vector<std::uint64_t>{1, 0, 1, 1}));
  auto iou = class_iou(cm);
  EXPECT_DOUBLE_EQ(iou[0], 0.5);
  EXPECT_DOUBLE_EQ(iou[1], 0.5);
  EXPECT_DOUBLE_EQ(miou(cm), 0.5);
  EXPECT_DOUBLE_EQ(fw_iou(cm), 0.5);
  EXPECT_EQ(metrics_csv(cm), "class,iou\n0,0.500000\n1,0.500000\nmiou,0.500000\nfw_iou,0.500000\n");
}

TEST(Confusion, PerfectPrediction) {
  test::Gen gen(71);
  LabelVector gt = test::random_labels(gen, 500, 6);
  ConfusionMatrix cm = confusion_matrix(gt, gt, 6);
  EXPECT_EQ(miou(cm), 1.0);
  EXPECT_EQ(fw_iou(cm), 1.0);
  EXPECT_EQ(cm.total(), 500u);
}

TEST(Confusion, AbsentClassIsExcluded) {
  ConfusionMatrix cm = confusion_matrix(labels({0, 1, 1}, 3), labels({0, 1, 1}, 3), 3);
  auto iou = class_iou(cm);
  EXPECT_TRUE(std::isnan(iou[2]));
  EXPECT_EQ(miou(cm), 1.0);
  // predicted but never true: present with IoU 0
  ConfusionMatrix fp = confusion_matrix(labels({0, 2, 1}, 3), labels({0, 1, 1}, 3), 3);
  EXPECT_EQ(class_iou(fp)[2], 0.0);
  EXPECT_DOUBLE_EQ(miou(fp), (1.0 + 0.5 + 0.0) / 3.0);
  EXPECT_EQ(metrics_csv(cm).substr(0, 36), "class,iou\n0,1.000000\n1,1.000000\n2,na");
}

TEST(Confusion, IgnoreIsSkippedAndAllIgnoreIsAnError) {
  ConfusionMatrix cm = confusion_matrix(labels({0, 1, 1}, 2), labels({0, 2, 2}, 2), 2);
  EXPECT_EQ(cm.ignored, 2u);
  EXPECT_EQ(cm.total(), 1u);
  ConfusionMatrix none = confusion_matrix(labels({0, 1}, 2), labels({2, 2}, 2), 2);
  EXPECT_THROW(miou(none), DataError);
  EXPECT_THROW(fw_iou(none), DataError);
  EXPECT_THROW(confusion_matrix(labels({0}, 2), labels({0, 1}, 2), 2), DataError);
  EXPECT_THROW(confusion_matrix(labels({5}, 2), labels({0}, 2), 2), DataError);
}

TEST(Confusion, MatchesOracleAndIsPermutationInvariant) {
  test::Gen gen(72);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t k = static_cast<std::uint32_t>(test::uniform_index(gen, 2, 10));
    const std::size_t n = test::uniform_index(gen, 1, 400);
    LabelVector gt = test::random_labels(gen, n, k + 1); // k itself becomes ignore
    gt.num_classes = k;
    LabelVector pred = test::random_labels(gen, n, k);
    if (gt.labels[0] == k)
      gt.labels[0] = 0;
    ConfusionMatrix cm = confusion_matrix(pred, gt, k);
    EXPECT_NEAR(miou(cm), miou_oracle(pred, gt), 1e-12);
    const double fw = fw_iou(cm);
    EXPECT_GE(fw, 0.0);
    EXPECT_LE(fw, 1.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    LabelVector pp = pred, gg = gt;
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = pred[perm[i]];
      gg[i] = gt[perm[i]];
    }
    EXPECT_EQ(confusion_matrix(pp, gg, k), cm);
  }
}

TEST(Stratified, SumRuleOnRandomCases) {
  test::Gen gen(73);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t k = static_cast<std::uint32_t>(test::uniform_index(gen, 2, 8));
    const std::size_t n = test::uniform_index(gen, 1, 500);
    PointCloud cloud = test::random_cloud(gen, n, 40.0);
    LabelVector gt = test::random_labels(gen, n, k), pred = test::random_labels(gen, n, k);
    std::vector<double> edges{test::uniform(gen, 0.0, 5.0)};
    const std::size_t bins = test::uniform_index(gen, 1, 6);
    for (std::size_t j = 0; j < bins; ++j)
      edges.push_back(edges.back() + test::uniform(gen, 1.0, 10.0));
    StratifiedMetrics m = stratified_confusion(pred, gt, cloud, edges);
    ASSERT_EQ(m.strata.size(), bins);
    ConfusionMatrix sum = m.dropped;
    for (const Stratum &s : m.strata)
      sum += s.cm;
    EXPECT_EQ(sum, confusion_matrix(pred, gt, k));
    for (std::size_t i = 0; i < n; ++i) {
      const double r = cloud[i].radius_xy();
      for (std::size_t j = 0; j < bins; ++j)
        if (r >= edges[j] && r < edges[j + 1])
          EXPECT_GT(m.strata[j].cm.total(), 0u);
    }
  }
}

TEST(Stratified, BoundariesAndCsv) {
  PointCloud cloud{{0, 0, 0, 0}, {10, 0, 0, 0}, {19.99, 0, 0, 0}, {20, 0, 0, 0}, {0, 35, 0, 0}};
  LabelVector gt = labels({0, 1, 1, 0, 1}, 2), pred = labels({0, 1, 0, 0, 1}, 2);
  StratifiedMetrics m = stratified_confusion(pred, gt, cloud, {0, 10, 20, 30});
  EXPECT_EQ(m.strata[0].cm.total(), 1u);
  EXPECT_EQ(m.strata[1].cm.total(), 2u);
  EXPECT_EQ(m.strata[2].cm.total(), 1u);
  EXPECT_EQ(m.dropped.total(), 1u);
  auto per = stratified_miou(pred, gt, cloud, {0, 10, 20, 30, 40});
  EXPECT_EQ(per[0], 1.0);
  EXPECT_DOUBLE_EQ(per[1], 0.25); // class 0 IoU 0/1, class 1 IoU 1/2
  EXPECT_EQ(per.size(), 4u);
  EXPECT_EQ(strata_csv(m), "r_lo,r_hi,miou\n0,10,1.000000\n10,20,0.250000\n20,30,1.000000\n");
  StratifiedMetrics empty = stratified_confusion(pred, gt, cloud, {50, 60});
  EXPECT_EQ(strata_csv(empty), "r_lo,r_hi,miou\n50,60,nan\n");
  EXPECT_THROW(stratified_confusion(pred, gt, cloud, {0}), DataError);
  EXPECT_THROW(stratified_confusion(pred, gt, cloud, {0, 10, 10}), DataError);
}

TEST(Stratified, AccumulateAcrossScans) {
  test::Gen gen(74);
  const std::vector<double> edges{0, 5, 15, 30};
  StratifiedMetrics total;
  ConfusionMatrix flat(4);
  for (int scan = 0; scan < 5; ++scan) {
    PointCloud cloud = test::random_cloud(gen, 200, 25.0);
    LabelVector gt = test::random_labels(gen, 200, 4), pred = test::random_labels(gen, 200, 4);
    accumulate(total, stratified_confusion(pred, gt, cloud, edges));
    flat += confusion_matrix(pred, gt, 4);
  }
  ConfusionMatrix sum = total.dropped;
  for (const Stratum &s : total.strata)
    sum += s.cm;
  EXPECT_EQ(sum, flat);
  StratifiedMetrics other = stratified_confusion(labels({0}, 4), labels({0}, 4),
                                                 {{1, 0, 0, 0}}, {0, 1});
  EXPECT_THROW(accumulate(total, other), DataError);
}

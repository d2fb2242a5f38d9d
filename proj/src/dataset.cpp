// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   dataset.cpp
 * @brief  Scan collections and the shared train / evaluate pipeline.
 */
#include "amvnet/dataset.hpp"

#include "amvnet/error.hpp"
#include "amvnet/fusion.hpp"
#include "amvnet/io.hpp"
#include "amvnet/projection.hpp"
#include "amvnet/random.hpp"

#include <fmt/core.h>

#include <sstream>

namespace amv {

std::vector<const Scan *> Dataset::split(bool validation) const {
  std::vector<const Scan *> out;
  for (const Scan &s : scans)
    if (s.validation == validation)
      out.push_back(&s);
  return out;
}

ScoreMatrix share_scores_on_grid(const ScoreMatrix &scores, const PointCloud &cloud,
                                 ViewGrid grid, const RunConfig &cfg) {
  if (grid == ViewGrid::None)
    return scores;
  ProjectionIndex index =
      grid == ViewGrid::Rv ? project_rv(cloud, cfg.rv).index : project_bev(cloud, cfg.bev);
  return gather_cell_scores_to_points(scatter_point_scores_to_cells(scores, index), index);
}

Scan synthesize_scan(const RunConfig &cfg, std::size_t index) {
  if (!cfg.synthetic)
    throw ConfigError("synthesize_scan: configuration has no [synthetic] source");
  const SyntheticSource &src = *cfg.synthetic;
  SceneConfig scene{derive_seed(cfg.seed, "scene", index), src.points_per_scan, cfg.num_classes,
                    src.primitives};
  Scan scan;
  scan.id = fmt::format("scan_{:03}", index);
  scan.validation = index >= src.train_scans;
  std::tie(scan.cloud, scan.gt) = generate_synthetic_scene(scene);
  scan.f = share_scores_on_grid(
      synthetic_scorer(scan.cloud, scan.gt, src.scorer_f, derive_seed(cfg.seed, "scorer.f", index)),
      scan.cloud, src.grid_f, cfg);
  scan.g = share_scores_on_grid(
      synthetic_scorer(scan.cloud, scan.gt, src.scorer_g, derive_seed(cfg.seed, "scorer.g", index)),
      scan.cloud, src.grid_g, cfg);
  return scan;
}

Dataset read_dataset_dir(const std::filesystem::path &dir, const RemapTable &remap,
                         std::uint32_t num_classes) {
  Dataset data;
  data.num_classes = num_classes;
  std::istringstream manifest(read_text_file(dir / "manifest.txt"));
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::istringstream fields(line);
    std::string id, split, extra;
    if (!(fields >> id))
      continue;
    if (!(fields >> split) || (split != "train" && split != "val") || (fields >> extra))
      throw DataError(fmt::format("manifest line {}: expected '<id> train|val'", line_no));

    Scan scan;
    scan.id = id;
    scan.validation = split == "val";
    scan.cloud = read_point_cloud(read_file(dir / (id + ".bin")));
    const auto label_path = dir / (id + ".label");
    scan.gt = std::filesystem::exists(label_path)
                  ? read_labels(read_file(label_path), remap, num_classes)
                  : LabelVector(scan.cloud.size(), num_classes, num_classes);
    scan.f = read_scores(read_file(dir / (id + ".f.amvs")));
    scan.g = read_scores(read_file(dir / (id + ".g.amvs")));
    const std::size_t n = scan.cloud.size();
    if (scan.gt.size() != n || scan.f.rows() != n || scan.g.rows() != n)
      throw DataError(fmt::format("scan {}: point, label and score counts disagree", id));
    if (scan.f.cols() != num_classes || scan.g.cols() != num_classes)
      throw DataError(fmt::format("scan {}: score files have {} / {} classes, expected {}", id,
                                  scan.f.cols(), scan.g.cols(), num_classes));
    data.scans.push_back(std::move(scan));
  }
  if (data.scans.empty())
    throw DataError("manifest lists no scans");
  return data;
}

Dataset load_dataset(const RunConfig &cfg) {
  if (cfg.disk) {
    RemapTable remap = cfg.disk->remap ? RemapTable::parse(read_text_file(*cfg.disk->remap))
                                       : RemapTable::identity(cfg.num_classes);
    return read_dataset_dir(cfg.disk->dir, remap, cfg.num_classes);
  }
  Dataset data;
  data.num_classes = cfg.num_classes;
  const std::size_t total = cfg.synthetic->train_scans + cfg.synthetic->val_scans;
  for (std::size_t i = 0; i < total; ++i)
    data.scans.push_back(synthesize_scan(cfg, i));
  return data;
}

void write_dataset_dir(const Dataset &data, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::string manifest;
  for (const Scan &s : data.scans) {
    write_file(dir / (s.id + ".bin"), write_point_cloud(s.cloud));
    write_file(dir / (s.id + ".label"), write_labels(s.gt));
    write_file(dir / (s.id + ".f.amvs"), write_scores(s.f));
    write_file(dir / (s.id + ".g.amvs"), write_scores(s.g));
    manifest += fmt::format("{} {}\n", s.id, s.validation ? "val" : "train");
  }
  const std::string_view text(manifest);
  write_file(dir / "manifest.txt",
             ByteView(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

TrainResult train_on(const Dataset &data, const HeadTrainConfig &cfg) {
  std::vector<ScanRef> refs;
  for (const Scan *s : data.split(false))
    refs.push_back(s->ref());
  if (refs.empty())
    throw DataError("dataset has no training scans");
  return train_point_head(refs, cfg);
}

Evaluation evaluate_split(const Dataset &data, bool validation, const std::vector<double> &strata,
                          const Predictor &predict) {
  const std::uint32_t k = data.num_classes;
  Evaluation ev;
  for (ConfusionMatrix *cm : {&ev.f, &ev.g, &ev.geometric, &ev.arithmetic, &ev.max, &ev.amvnet})
    *cm = ConfusionMatrix(k);
  bool first = true;
  for (const Scan *s : data.split(validation)) {
    ev.f += confusion_matrix(argmax_labels(s->f), s->gt, k);
    ev.g += confusion_matrix(argmax_labels(s->g), s->gt, k);
    ev.geometric += confusion_matrix(argmax_labels(combine_geometric(s->f, s->g)), s->gt, k);
    ev.arithmetic += confusion_matrix(argmax_labels(combine_arithmetic(s->f, s->g)), s->gt, k);
    ev.max += confusion_matrix(argmax_labels(combine_max(s->f, s->g)), s->gt, k);

    LabelVector pred = predict(*s);
    if (pred.size() != s->cloud.size())
      throw DataError(fmt::format("scan {}: {} predictions for {} points", s->id, pred.size(),
                                  s->cloud.size()));
    ev.amvnet += confusion_matrix(pred, s->gt, k);
    auto strat = stratified_confusion(pred, s->gt, s->cloud, strata);
    if (first)
      ev.amvnet_strata = std::move(strat);
    else
      accumulate(ev.amvnet_strata, strat);
    first = false;
    ev.points += s->cloud.size();
  }
  if (first)
    throw DataError(fmt::format("dataset has no {} scans", validation ? "validation" : "training"));
  return ev;
}

Evaluation evaluate_split(const Dataset &data, bool validation, const PointHeadModel &model,
                          double tau, const std::vector<double> &strata) {
  std::size_t uncertain = 0;
  Evaluation ev = evaluate_split(data, validation, strata, [&](const Scan &s) {
    FusionResult fused = fuse_predictions(s.cloud, s.f, s.g, tau, model);
    uncertain += fused.mask.count();
    return std::move(fused.labels);
  });
  ev.uncertain = uncertain;
  return ev;
}

std::string comparison_csv(const Evaluation &ev) {
  std::string out = "method,miou,fw_iou\n";
  auto row = [&](const char *name, const ConfusionMatrix &cm) {
    out += fmt::format("{},{:.6f},{:.6f}\n", name, miou(cm), fw_iou(cm));
  };
  row("view_f", ev.f);
  row("view_g", ev.g);
  row("geometric", ev.geometric);
  row("arithmetic", ev.arithmetic);
  row("max", ev.max);
  row("amvnet", ev.amvnet);
  return out;
}

} // namespace amv

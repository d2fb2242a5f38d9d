// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   commands.cpp
 * @brief  Subcommand implementations.
 */
#include "amvnet/commands.hpp"

#include "amvnet/assertion.hpp"
#include "amvnet/config.hpp"
#include "amvnet/dataset.hpp"
#include "amvnet/error.hpp"
#include "amvnet/fusion.hpp"
#include "amvnet/io.hpp"
#include "amvnet/metrics.hpp"

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace amv {

namespace {

namespace fs = std::filesystem;

ByteView as_bytes(std::string_view text) {
  return {reinterpret_cast<const std::uint8_t *>(text.data()), text.size()};
}

void write_text(const fs::path &path, std::string_view text) { write_file(path, as_bytes(text)); }

RunConfig prepare(const CommandOptions &opts) {
  RunConfig cfg = load_run_config(opts.config);
  if (opts.seed)
    cfg.set_seed(*opts.seed);
  if (opts.augment)
    cfg.train.augment = cfg.augment_ranges;
  return cfg;
}

void open_output(const CommandOptions &opts, const RunConfig &cfg) {
  fs::create_directories(opts.out);
  write_text(opts.out / "config.ini", cfg.text);
}

PointHeadModel load_model(const fs::path &path, const RunConfig &cfg) {
  PointHeadModel model = PointHeadModel::from_checkpoint(nn::read_checkpoint(read_file(path)));
  if (model.num_classes != cfg.num_classes)
    throw DataError(fmt::format("checkpoint has {} classes, configuration has {}",
                                model.num_classes, cfg.num_classes));
  return model;
}

int cmd_synth(const CommandOptions &opts, std::ostream &log) {
  RunConfig cfg = prepare(opts);
  if (!cfg.synthetic)
    throw ConfigError("synth needs a [synthetic] section");
  open_output(opts, cfg);
  Dataset data = load_dataset(cfg);
  write_dataset_dir(data, opts.out / "data");
  fmt::print(log, "wrote {} scans to {}\n", data.scans.size(), (opts.out / "data").string());
  return kExitOk;
}

int cmd_assert(const CommandOptions &opts, std::ostream &log) {
  RunConfig cfg = prepare(opts);
  open_output(opts, cfg);
  Dataset data = load_dataset(cfg);

  std::vector<double> taus = cfg.sweep_taus;
  taus.push_back(cfg.tau);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  UncertaintyMask all;
  all.tau = cfg.tau;
  for (const Scan &s : data.scans) {
    UncertaintyMask m = uncertainty_mask(s.f, s.g, cfg.tau);
    all.similarity.insert(all.similarity.end(), m.similarity.begin(), m.similarity.end());
    all.uncertain.insert(all.uncertain.end(), m.uncertain.begin(), m.uncertain.end());
  }
  write_text(opts.out / "histogram.csv",
             histogram_csv(similarity_histogram(all, cfg.histogram_bins)));

  std::string summary = "tau,points,uncertain,fraction\n";
  for (double tau : taus) {
    UncertaintyMask m = rethreshold(all, tau);
    summary += fmt::format("{},{},{},{:.6f}\n", tau, m.uncertain.size(), m.count(), m.fraction());
  }
  write_text(opts.out / "uncertain_fraction.csv", summary);
  fmt::print(log, "uncertain fraction at tau={}: {:.4f} of {} points\n", cfg.tau, all.fraction(),
             all.uncertain.size());
  return kExitOk;
}

int cmd_train(const CommandOptions &opts, std::ostream &log) {
  RunConfig cfg = prepare(opts);
  open_output(opts, cfg);
  Dataset data = load_dataset(cfg);
  TrainResult result = train_on(data, cfg.train);
  for (const auto &w : result.warnings)
    fmt::print(log, "warning: {}\n", w);
  write_file(opts.out / "model.amvm", nn::write_checkpoint(result.model.to_checkpoint()));
  write_text(opts.out / "loss_trace.csv", loss_trace_csv(result.trace));
  if (!result.trace.empty())
    fmt::print(log, "trained {} epochs, final loss {:.6f}\n", result.trace.size(),
               result.trace.back().mean_loss);
  return kExitOk;
}

int cmd_fuse(const CommandOptions &opts, std::ostream &log) {
  RunConfig cfg = prepare(opts);
  if (!opts.checkpoint)
    throw ConfigError("fuse requires --checkpoint");
  PointHeadModel model = load_model(*opts.checkpoint, cfg);
  Dataset data = load_dataset(cfg);
  open_output(opts, cfg);
  const fs::path dir = opts.out / "predictions";
  fs::create_directories(dir);
  std::size_t uncertain = 0, points = 0;
  for (const Scan &s : data.scans) {
    FusionResult fused = fuse_predictions(s.cloud, s.f, s.g, cfg.tau, model);
    write_file(dir / (s.id + ".pred"), write_predictions(fused.labels));
    write_file(dir / (s.id + ".src"), write_source_tags(fused.source));
    if (cfg.emit_ensemble_scores)
      write_file(dir / (s.id + ".ens.amvs"), write_scores(*fused.combined_scores));
    uncertain += fused.mask.count();
    points += s.cloud.size();
  }
  fmt::print(log, "fused {} scans, {} of {} points refined\n", data.scans.size(), uncertain,
             points);
  return kExitOk;
}

int cmd_eval(const CommandOptions &opts, std::ostream &log) {
  RunConfig cfg = prepare(opts);
  std::optional<PointHeadModel> model;
  if (opts.checkpoint)
    model = load_model(*opts.checkpoint, cfg);
  Dataset data = load_dataset(cfg);
  const fs::path pred_dir = opts.predictions ? *opts.predictions : opts.out / "predictions";

  Evaluation ev = model ? evaluate_split(data, true, *model, cfg.tau, cfg.strata)
                        : evaluate_split(data, true, cfg.strata, [&](const Scan &s) {
                            return read_predictions(read_file(pred_dir / (s.id + ".pred")),
                                                    cfg.num_classes);
                          });
  open_output(opts, cfg);
  write_text(opts.out / "metrics.csv", metrics_csv(ev.amvnet));
  write_text(opts.out / "strata.csv", strata_csv(ev.amvnet_strata));
  write_text(opts.out / "comparison.csv", comparison_csv(ev));
  fmt::print(log, "mIoU {:.4f} (geometric ensemble {:.4f})\n", miou(ev.amvnet),
             miou(ev.geometric));
  return kExitOk;
}

int cmd_sweep(const CommandOptions &opts, std::ostream &log) {
  RunConfig cfg = prepare(opts);
  if (opts.axis != "tau" && opts.axis != "neighbors")
    throw ConfigError("sweep requires --axis tau|neighbors");
  std::vector<double> values = opts.values;
  if (values.empty())
    values = opts.axis == "tau" ? cfg.sweep_taus : std::vector<double>{3, 7, 15};
  for (double v : values) {
    if (opts.axis == "tau" && !(v >= 0.0 && v <= 1.0))
      throw ConfigError(fmt::format("sweep tau {} outside [0, 1]", v));
    if (opts.axis == "neighbors" && (!(v >= 1.0) || v != std::floor(v) || v > 1e6))
      throw ConfigError(fmt::format("sweep neighbors {} is not a positive integer", v));
  }
  open_output(opts, cfg);
  Dataset data = load_dataset(cfg);

  std::string csv = fmt::format("{},miou,uncertain_fraction\n", opts.axis);
  for (double v : values) {
    HeadTrainConfig tc = cfg.train;
    if (opts.axis == "tau")
      tc.tau = v;
    else
      tc.neighbors = static_cast<std::uint32_t>(v);
    TrainResult result = train_on(data, tc);
    Evaluation ev = evaluate_split(data, true, result.model, tc.tau, cfg.strata);
    csv += fmt::format("{},{:.6f},{:.6f}\n", v, miou(ev.amvnet), ev.uncertain_fraction());
    fmt::print(log, "{}={}: mIoU {:.4f}\n", opts.axis, v, miou(ev.amvnet));
  }
  write_text(opts.out / fmt::format("sweep_{}.csv", opts.axis), csv);
  return kExitOk;
}

} // namespace

int run_command(const std::string &name, const CommandOptions &opts, std::ostream &log,
                std::ostream &err) {
  try {
    if (name == "synth")
      return cmd_synth(opts, log);
    if (name == "assert")
      return cmd_assert(opts, log);
    if (name == "train")
      return cmd_train(opts, log);
    if (name == "fuse")
      return cmd_fuse(opts, log);
    if (name == "eval")
      return cmd_eval(opts, log);
    if (name == "sweep")
      return cmd_sweep(opts, log);
    fmt::print(err, "error: unknown command '{}'\n", name);
    return kExitUsage;
  } catch (const ConfigError &e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitUsage;
  } catch (const DivergenceError &e) {
    fmt::print(err, "training diverged: {}\n", e.what());
    return kExitDiverged;
  } catch (const std::exception &e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kExitData;
  }
}

} // namespace amv

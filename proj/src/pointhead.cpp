// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   pointhead.cpp
 * @brief  Point head forward/backward, training and inference.
 */
#include "amvnet/pointhead.hpp"

#include "amvnet/error.hpp"
#include "amvnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace amv {

using nn::Index;
using nn::Matrix;
using nn::Vector;

std::size_t PointHeadModel::parameter_count() const {
  std::size_t n = fc.parameter_count();
  for (const auto &layer : mlp)
    n += layer.parameter_count();
  return n;
}

std::vector<std::span<double>> PointHeadModel::parameter_blocks() {
  std::vector<std::span<double>> out;
  const auto add = [&](nn::DenseLayer &l) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  };
  for (auto &layer : mlp)
    add(layer);
  add(fc);
  return out;
}

std::vector<std::span<const double>> HeadGradients::blocks() const {
  std::vector<std::span<const double>> out;
  const auto add = [&](const nn::DenseGrad &g) {
    out.emplace_back(g.weight.data(), static_cast<std::size_t>(g.weight.size()));
    out.emplace_back(g.bias.data(), static_cast<std::size_t>(g.bias.size()));
  };
  for (const auto &g : mlp)
    add(g);
  add(fc);
  return out;
}

nn::Checkpoint PointHeadModel::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.num_classes = static_cast<std::uint16_t>(num_classes);
  ckpt.neighbors = static_cast<std::uint16_t>(neighbors);
  for (const auto &layer : mlp) {
    ckpt.tensors.push_back(nn::to_tensor(layer.weight));
    ckpt.tensors.push_back(nn::to_tensor(layer.bias));
  }
  ckpt.tensors.push_back(nn::to_tensor(fc.weight));
  ckpt.tensors.push_back(nn::to_tensor(fc.bias));
  nn::Tensor coords;
  coords.shape = {2, 4};
  coords.values.assign(coord_shift.begin(), coord_shift.end());
  coords.values.insert(coords.values.end(), coord_scale.begin(), coord_scale.end());
  ckpt.tensors.push_back(std::move(coords));
  return ckpt;
}

PointHeadModel PointHeadModel::from_checkpoint(const nn::Checkpoint &ckpt) {
  if (ckpt.tensors.size() != 9)
    throw DataError("point head checkpoint must hold 9 tensors, found " +
                    std::to_string(ckpt.tensors.size()));
  PointHeadModel m;
  m.num_classes = ckpt.num_classes;
  m.neighbors = ckpt.neighbors;
  for (std::size_t l = 0; l < 3; ++l) {
    m.mlp[l].weight = nn::matrix_from(ckpt.tensors[2 * l]);
    m.mlp[l].bias = nn::vector_from(ckpt.tensors[2 * l + 1]);
  }
  m.fc.weight = nn::matrix_from(ckpt.tensors[6]);
  m.fc.bias = nn::vector_from(ckpt.tensors[7]);
  const nn::Tensor &coords = ckpt.tensors[8];
  if (coords.shape != std::vector<std::uint32_t>{2, 4})
    throw DataError("point head checkpoint: coordinate tensor must be 2x4");
  std::copy_n(coords.values.begin(), 4, m.coord_shift.begin());
  std::copy_n(coords.values.begin() + 4, 4, m.coord_scale.begin());

  const auto k = static_cast<Index>(m.num_classes);
  const Index in = m.mlp[0].in_features();
  if (in == 2 * k + 4)
    m.phi = PhiMode::OffsetAndNorm;
  else if (in == 2 * k + 1)
    m.phi = PhiMode::NormOnly;
  else
    throw DataError("point head checkpoint: first layer width does not match K");
  for (std::size_t l = 1; l < 3; ++l)
    if (m.mlp[l].in_features() != m.mlp[l - 1].out_features())
      throw DataError("point head checkpoint: MLP layer widths do not chain");
  for (const auto &layer : m.mlp)
    if (layer.bias.size() != layer.out_features())
      throw DataError("point head checkpoint: bias length mismatch");
  if (m.fc.in_features() != m.mlp[2].out_features() + 2 * k + 4 || m.fc.out_features() != k ||
      m.fc.bias.size() != k)
    throw DataError("point head checkpoint: classifier shape mismatch");
  return m;
}

PointHeadModel init_point_head(std::uint32_t num_classes, std::uint32_t neighbors,
                               std::array<int, 3> widths, std::uint64_t seed, PhiMode phi) {
  if (num_classes == 0 || neighbors == 0)
    throw std::invalid_argument("init_point_head: num_classes and neighbors must be positive");
  for (int w : widths)
    if (w <= 0)
      throw std::invalid_argument("init_point_head: hidden widths must be positive");
  PointHeadModel m;
  m.num_classes = num_classes;
  m.neighbors = neighbors;
  m.phi = phi;

  Rng rng(derive_seed(seed, "pointhead.init"));
  const auto make = [&](Index in, Index out) {
    nn::DenseLayer layer(in, out);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    return layer;
  };
  Index in = static_cast<Index>(m.set_width());
  for (std::size_t l = 0; l < 3; ++l) {
    m.mlp[l] = make(in, widths[l]);
    in = widths[l];
  }
  m.fc = make(in + static_cast<Index>(m.point_width()), num_classes);
  return m;
}

namespace {

struct Forward {
  std::array<Matrix, 3> pre;  ///< MLP pre-activations
  std::array<Matrix, 3> post; ///< after ReLU
  Matrix z;                   ///< pooled ++ standardized point features
  std::vector<Index> argmax;  ///< B x width3, absolute row into the set matrix
  Matrix logits;
};

Matrix standardized_points(const PointHeadModel &m, const Matrix &points) {
  Matrix out = points;
  const auto base = static_cast<Index>(2 * m.num_classes);
  for (Index j = 0; j < 4; ++j)
    out.col(base + j) = (out.col(base + j).array() - m.coord_shift[j]) / m.coord_scale[j];
  return out;
}

Forward run_forward(const PointHeadModel &m, const Matrix &sets, const Matrix &points) {
  const Index batch = points.rows();
  if (batch == 0 || sets.rows() % batch != 0 || sets.rows() == 0)
    throw std::invalid_argument("point head: set rows must be a positive multiple of batch");
  if (sets.cols() != static_cast<Index>(m.set_width()) ||
      points.cols() != static_cast<Index>(m.point_width()))
    throw std::invalid_argument("point head: feature width does not match model");
  const Index per = sets.rows() / batch;

  Forward f;
  const Matrix *x = &sets;
  for (std::size_t l = 0; l < 3; ++l) {
    f.pre[l] = m.mlp[l].forward(*x);
    f.post[l] = nn::relu(f.pre[l]);
    x = &f.post[l];
  }
  const Matrix &h = f.post[2];
  const Index width = h.cols();
  f.z.resize(batch, width + points.cols());
  f.argmax.resize(static_cast<std::size_t>(batch * width));
  for (Index b = 0; b < batch; ++b)
    for (Index c = 0; c < width; ++c) {
      Index best = b * per;
      for (Index r = b * per + 1; r < (b + 1) * per; ++r)
        if (h(r, c) > h(best, c))
          best = r;
      f.z(b, c) = h(best, c);
      f.argmax[static_cast<std::size_t>(b * width + c)] = best;
    }
  f.z.rightCols(points.cols()) = standardized_points(m, points);
  f.logits = m.fc.forward(f.z);
  return f;
}

} // namespace

Vector point_head_forward(const PointHeadModel &model, const Vector &point, const Matrix &set) {
  const Matrix points = point.transpose();
  return run_forward(model, set, points).logits.row(0).transpose();
}

Matrix point_head_logits(const PointHeadModel &model, const HeadBatch &batch) {
  return run_forward(model, batch.sets, batch.points).logits;
}

HeadLoss point_head_backward(const PointHeadModel &model, const HeadBatch &batch,
                             std::span<const double> class_weights) {
  const Index bsz = batch.points.rows();
  if (batch.targets.size() != static_cast<std::size_t>(bsz))
    throw std::invalid_argument("point head backward: target count != batch size");
  for (std::uint32_t t : batch.targets)
    if (t >= model.num_classes)
      throw DataError("point head backward: ignore or out-of-range target in batch");

  const Forward f = run_forward(model, batch.sets, batch.points);
  HeadLoss out;
  Matrix dlogits(bsz, f.logits.cols());
  for (Index b = 0; b < bsz; ++b) {
    const auto ce = nn::softmax_ce(f.logits.row(b).transpose(),
                                   batch.targets[static_cast<std::size_t>(b)], class_weights);
    out.loss += ce.loss;
    dlogits.row(b) = ce.grad.transpose();
  }
  out.loss /= static_cast<double>(bsz);
  dlogits /= static_cast<double>(bsz);

  const Matrix dz = model.fc.backward(f.z, dlogits, out.grads.fc);
  const Index width = f.post[2].cols();
  Matrix dh = Matrix::Zero(f.post[2].rows(), width);
  for (Index b = 0; b < bsz; ++b)
    for (Index c = 0; c < width; ++c)
      dh(f.argmax[static_cast<std::size_t>(b * width + c)], c) = dz(b, c);

  for (std::size_t l = 3; l-- > 0;) {
    const Matrix da = nn::relu_backward(f.pre[l], dh);
    const Matrix &input = l == 0 ? batch.sets : f.post[l - 1];
    dh = model.mlp[l].backward(input, da, out.grads.mlp[l]);
  }
  return out;
}

void HeadTrainConfig::validate() const {
  if (epochs < 0)
    throw ConfigError("epochs must be non-negative");
  if (batch_size == 0)
    throw ConfigError("batch_size must be positive");
  if (neighbors == 0)
    throw ConfigError("neighbors must be positive");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw ConfigError("tau must lie in [0, 1]");
  for (int w : widths)
    if (w <= 0)
      throw ConfigError("hidden widths must be positive");
  if (!(schedule.lr_max > 0.0) || !(schedule.start_div > 0.0) || !(schedule.end_div > 0.0) ||
      !(schedule.warmup_frac >= 0.0 && schedule.warmup_frac <= 1.0))
    throw ConfigError("invalid one-cycle schedule");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
}

std::vector<double> sqrt_inverse_class_weights(const std::vector<const LabelVector *> &labels,
                                               std::uint32_t num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  double total = 0.0;
  for (const LabelVector *lv : labels)
    for (std::size_t i = 0; i < lv->size(); ++i)
      if (!lv->is_ignore(i)) {
        counts[(*lv)[i]] += 1.0;
        total += 1.0;
      }
  std::vector<double> w(num_classes, 0.0);
  if (total == 0.0)
    return w;
  double sum = 0.0;
  int present = 0;
  for (std::uint32_t c = 0; c < num_classes; ++c)
    if (counts[c] > 0.0) {
      w[c] = 1.0 / std::sqrt(counts[c] / total);
      sum += w[c];
      ++present;
    }
  for (double &v : w)
    v *= present / sum;
  return w;
}

namespace {

struct PreparedScan {
  ScanRef ref;
  UncertaintyMask mask;
  std::vector<bool> eligible;
  KdTree tree;
};

/// Fills example `slot` of a batch from point i of a scan.
void fill_example(HeadBatch &batch, std::size_t slot, std::size_t i, const KdTree &tree,
                  std::uint32_t n, PhiMode phi, const PointCloud &cloud, const ScoreMatrix &f,
                  const ScoreMatrix &g) {
  const auto neighbors = tree.knn(i, n);
  const auto s = static_cast<Index>(slot);
  batch.sets.middleRows(s * n, n) = assemble_set_features(i, neighbors, f, g, cloud, phi);
  batch.points.row(s) = assemble_point_features(i, f, g, cloud).transpose();
}

AugmentParams draw_augmentation(const AugmentRanges &r, Rng &rng) {
  AugmentParams p;
  p.scale = rng.uniform(r.scale_lo, r.scale_hi);
  p.flip_x = r.flips && rng.bernoulli(0.5);
  p.flip_y = r.flips && rng.bernoulli(0.5);
  p.yaw = r.rotate ? rng.uniform(0.0, 2.0 * std::numbers::pi) : 0.0;
  p.jitter_sigma = r.jitter_sigma;
  return p;
}

} // namespace

TrainResult train_point_head(const std::vector<ScanRef> &scans, const HeadTrainConfig &cfg) {
  cfg.validate();
  if (scans.empty())
    throw DataError("train_point_head: no scans");
  const std::uint32_t k = scans.front().gt->num_classes;

  TrainResult result;
  result.model = init_point_head(k, cfg.neighbors, cfg.widths, cfg.seed, cfg.phi);
  if (cfg.epochs == 0)
    return result;

  std::vector<PreparedScan> prepared;
  std::vector<const LabelVector *> all_labels;
  for (std::size_t s = 0; s < scans.size(); ++s) {
    const ScanRef &ref = scans[s];
    const std::size_t n_pts = ref.cloud->size();
    if (ref.gt->size() != n_pts || ref.f->rows() != n_pts || ref.g->rows() != n_pts ||
        ref.f->cols() != k || ref.g->cols() != k || ref.gt->num_classes != k)
      throw DataError("train_point_head: scan " + std::to_string(s) + " has inconsistent shapes");
    if (n_pts < cfg.neighbors)
      throw DataError("train_point_head: scan " + std::to_string(s) +
                      " has fewer points than neighbors");
    all_labels.push_back(ref.gt);
    UncertaintyMask mask = uncertainty_mask(*ref.f, *ref.g, cfg.tau);
    std::vector<bool> eligible(n_pts);
    bool any = false;
    for (std::size_t i = 0; i < n_pts; ++i) {
      eligible[i] = !ref.gt->is_ignore(i);
      any = any || (eligible[i] && mask.uncertain[i]);
    }
    if (!any) {
      result.warnings.push_back("scan " + std::to_string(s) +
                                " has no labelled uncertain points; skipped");
      continue;
    }
    prepared.push_back({ref, std::move(mask), std::move(eligible), KdTree(*ref.cloud)});
  }
  if (prepared.empty())
    throw DataError("train_point_head: every scan lacks uncertain points at tau");

  result.class_weights = cfg.weighting == ClassWeighting::SqrtInverse
                             ? sqrt_inverse_class_weights(all_labels, k)
                             : std::vector<double>(k, 1.0);

  PointHeadModel &model = result.model;
  if (cfg.standardize) {
    std::array<double, 4> sum{}, sq{};
    double count = 0.0;
    for (const ScanRef &ref : scans)
      for (const Point &p : *ref.cloud) {
        const std::array<double, 4> v{p.x, p.y, p.z, p.intensity};
        for (int j = 0; j < 4; ++j) {
          sum[j] += v[j];
          sq[j] += v[j] * v[j];
        }
        count += 1.0;
      }
    for (int j = 0; j < 4; ++j) {
      const double mean = sum[j] / count;
      model.coord_shift[j] = mean;
      model.coord_scale[j] = std::max(std::sqrt(std::max(sq[j] / count - mean * mean, 0.0)), 1e-6);
    }
  }

  nn::TrainState state;
  state.total_steps = static_cast<std::size_t>(cfg.epochs) * prepared.size();
  state.schedule = cfg.schedule;
  state.momentum = cfg.momentum;

  const std::uint32_t n = cfg.neighbors;
  HeadBatch batch;
  batch.sets.resize(static_cast<Index>(cfg.batch_size * n), static_cast<Index>(model.set_width()));
  batch.points.resize(static_cast<Index>(cfg.batch_size), static_cast<Index>(model.point_width()));
  batch.targets.resize(cfg.batch_size);

  std::vector<std::size_t> order(prepared.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t s = 0; s < order.size(); ++s)
      order[s] = s;
    Rng shuffle(derive_seed(cfg.seed, "train.epoch", static_cast<std::uint64_t>(epoch)));
    for (std::size_t s = order.size(); s > 1; --s)
      std::swap(order[s - 1], order[shuffle.index(s)]);

    double loss_sum = 0.0;
    double last_lr = 0.0;
    for (std::size_t s : order) {
      const PreparedScan &scan = prepared[s];
      const std::uint64_t step = state.step;
      const auto picks = sample_training_batch(scan.mask, cfg.batch_size,
                                               derive_seed(cfg.seed, "train.batch", step),
                                               &scan.eligible);
      PointCloud augmented;
      const PointCloud *cloud = scan.ref.cloud;
      if (cfg.augment) {
        Rng aug_rng(derive_seed(cfg.seed, "train.augment", step));
        augmented = augment_cloud(*cloud, draw_augmentation(*cfg.augment, aug_rng),
                                  derive_seed(cfg.seed, "train.jitter", step));
        cloud = &augmented;
      }
      for (std::size_t b = 0; b < picks.size(); ++b) {
        fill_example(batch, b, picks[b], scan.tree, n, model.phi, *cloud, *scan.ref.f,
                     *scan.ref.g);
        batch.targets[b] = (*scan.ref.gt)[picks[b]];
      }

      HeadLoss step_loss = point_head_backward(model, batch, result.class_weights);
      if (!std::isfinite(step_loss.loss))
        throw DivergenceError(fmt::format("non-finite loss at epoch {} step {}", epoch, step));
      last_lr = state.current_lr();
      const auto params = model.parameter_blocks();
      const auto grads = step_loss.grads.blocks();
      nn::sgd_step(params, grads, state);
      loss_sum += step_loss.loss;
    }
    result.trace.push_back({epoch, loss_sum / static_cast<double>(order.size()), last_lr});
  }
  return result;
}

std::string loss_trace_csv(const std::vector<EpochStat> &trace) {
  std::string out = "epoch,mean_loss,lr\n";
  for (const EpochStat &e : trace)
    out += fmt::format("{},{:.9g},{:.9g}\n", e.epoch, e.mean_loss, e.lr);
  return out;
}

std::vector<std::uint32_t> predict_uncertain(const PointHeadModel &model,
                                             const PointCloud &cloud, const ScoreMatrix &f,
                                             const ScoreMatrix &g, const UncertaintyMask &mask,
                                             const KdTree *tree) {
  const std::vector<std::size_t> idx = mask.uncertain_indices();
  std::vector<std::uint32_t> out;
  if (idx.empty())
    return out;
  if (model.neighbors > cloud.size())
    throw std::invalid_argument("predict_uncertain: neighbors exceed cloud size");
  if (f.cols() != model.num_classes || g.cols() != model.num_classes)
    throw DataError("predict_uncertain: score width does not match model classes");

  std::optional<KdTree> owned;
  if (!tree) {
    owned.emplace(cloud);
    tree = &*owned;
  }
  out.reserve(idx.size());
  constexpr std::size_t kChunk = 512;
  const std::uint32_t n = model.neighbors;
  HeadBatch batch;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, idx.size() - start);
    batch.sets.resize(static_cast<Index>(len * n), static_cast<Index>(model.set_width()));
    batch.points.resize(static_cast<Index>(len), static_cast<Index>(model.point_width()));
    for (std::size_t b = 0; b < len; ++b)
      fill_example(batch, b, idx[start + b], *tree, n, model.phi, cloud, f, g);
    const Matrix logits = point_head_logits(model, batch);
    for (Index b = 0; b < logits.rows(); ++b) {
      Index best = 0;
      for (Index c = 1; c < logits.cols(); ++c)
        if (logits(b, c) > logits(b, best))
          best = c;
      out.push_back(static_cast<std::uint32_t>(best));
    }
  }
  return out;
}

} // namespace amv

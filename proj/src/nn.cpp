// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   nn.cpp
 * @brief  Layers, losses, GRU, optimizer and checkpoint format.
 */
#include "amvnet/nn.hpp"

#include "amvnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace amv::nn {

void DenseGrad::zero_like(Index out, Index in) {
  weight = Matrix::Zero(out, in);
  bias = Vector::Zero(out);
}

Vector DenseLayer::forward(const Vector &x) const {
  if (x.size() != in_features())
    throw std::invalid_argument("linear: input width " + std::to_string(x.size()) +
                                " != " + std::to_string(in_features()));
  return weight * x + bias;
}

Matrix DenseLayer::forward(const Matrix &x) const {
  if (x.cols() != in_features())
    throw std::invalid_argument("linear: input width " + std::to_string(x.cols()) +
                                " != " + std::to_string(in_features()));
  Matrix y = x * weight.transpose();
  y.rowwise() += bias.transpose();
  return y;
}

Matrix DenseLayer::backward(const Matrix &x, const Matrix &dy, DenseGrad &grad) const {
  if (dy.cols() != out_features() || dy.rows() != x.rows() || x.cols() != in_features())
    throw std::invalid_argument("linear backward: shape mismatch");
  if (grad.weight.size() == 0)
    grad.zero_like(out_features(), in_features());
  grad.weight.noalias() += dy.transpose() * x;
  grad.bias += dy.colwise().sum().transpose();
  return dy * weight;
}

Matrix relu(const Matrix &x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix &x, const Matrix &dy) {
  if (x.rows() != dy.rows() || x.cols() != dy.cols())
    throw std::invalid_argument("relu backward: shape mismatch");
  return (x.array() > 0.0).select(dy, 0.0);
}

MaxPoolResult set_maxpool(const Matrix &set) {
  if (set.rows() == 0)
    throw std::invalid_argument("set_maxpool: empty set");
  MaxPoolResult out;
  out.values.resize(set.cols());
  out.argmax_row.resize(static_cast<std::size_t>(set.cols()));
  for (Index c = 0; c < set.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < set.rows(); ++r)
      if (set(r, c) > set(best, c))
        best = r;
    out.values[c] = set(best, c);
    out.argmax_row[static_cast<std::size_t>(c)] = best;
  }
  return out;
}

Matrix set_maxpool_backward(const MaxPoolResult &pooled, const Vector &dy, Index rows) {
  if (dy.size() != pooled.values.size())
    throw std::invalid_argument("set_maxpool backward: shape mismatch");
  Matrix d = Matrix::Zero(rows, dy.size());
  for (Index c = 0; c < dy.size(); ++c)
    d(pooled.argmax_row[static_cast<std::size_t>(c)], c) = dy[c];
  return d;
}

Vector softmax(const Vector &logits) {
  const double peak = logits.maxCoeff();
  Vector e = (logits.array() - peak).exp();
  return e / e.sum();
}

LossAndGrad softmax_ce(const Vector &logits, std::uint32_t target,
                       std::span<const double> class_weights) {
  const auto k = static_cast<std::size_t>(logits.size());
  if (target >= k)
    throw std::out_of_range("softmax_ce: target " + std::to_string(target) + " >= K");
  if (!class_weights.empty() && class_weights.size() != k)
    throw std::invalid_argument("softmax_ce: class weight count != K");
  const double w = class_weights.empty() ? 1.0 : class_weights[target];

  const double peak = logits.maxCoeff();
  const Vector shifted = logits.array() - peak;
  const double log_sum = std::log(shifted.array().exp().sum());
  const Vector p = (shifted.array() - log_sum).exp();

  LossAndGrad out;
  out.loss = -w * (shifted[target] - log_sum);
  out.grad = w * p;
  out.grad(target, 0) -= w;
  return out;
}

LossAndGrad dice_loss(const Matrix &probs, const Matrix &onehot, double epsilon) {
  if (probs.rows() != onehot.rows() || probs.cols() != onehot.cols())
    throw std::invalid_argument("dice_loss: shape mismatch");
  const Index k = probs.cols();
  LossAndGrad out;
  out.grad = Matrix::Zero(probs.rows(), k);
  for (Index c = 0; c < k; ++c) {
    const double inter = probs.col(c).dot(onehot.col(c));
    const double denom = probs.col(c).sum() + onehot.col(c).sum() + epsilon;
    const double num = 2.0 * inter + epsilon;
    out.loss += 1.0 - num / denom;
    // d/dp [-(2I + e)/D] = -(2 t D - (2I + e)) / D^2
    out.grad.col(c) = -(2.0 * onehot.col(c).array() * denom - num) / (denom * denom);
  }
  out.loss /= static_cast<double>(k);
  out.grad /= static_cast<double>(k);
  return out;
}

// ---------------------------------------------------------------------------
// GRU

GruParams GruParams::zeros(Index input, Index hidden) {
  GruParams p;
  p.wz = p.wr = p.wn = Matrix::Zero(hidden, input);
  p.uz = p.ur = p.un = Matrix::Zero(hidden, hidden);
  p.bz = p.br = p.bn = Vector::Zero(hidden);
  return p;
}

std::vector<std::span<double>> GruParams::blocks() {
  std::vector<std::span<double>> out;
  for (Matrix *m : {&wz, &wr, &wn, &uz, &ur, &un})
    out.emplace_back(m->data(), static_cast<std::size_t>(m->size()));
  for (Vector *v : {&bz, &br, &bn})
    out.emplace_back(v->data(), static_cast<std::size_t>(v->size()));
  return out;
}

namespace {

Vector sigmoid(const Vector &a) { return (1.0 + (-a.array()).exp()).inverse(); }

} // namespace

Vector gru_cell(const Vector &x, const Vector &h_prev, const GruParams &params,
                GruCache *cache) {
  if (x.size() != params.input_size() || h_prev.size() != params.hidden_size())
    throw std::invalid_argument("gru_cell: shape mismatch");
  const Vector z = sigmoid(params.wz * x + params.uz * h_prev + params.bz);
  const Vector r = sigmoid(params.wr * x + params.ur * h_prev + params.br);
  const Vector un_h = params.un * h_prev;
  const Vector n = (params.wn * x + params.bn + r.cwiseProduct(un_h)).array().tanh();
  Vector h = (1.0 - z.array()) * n.array() + z.array() * h_prev.array();
  if (cache)
    *cache = {x, h_prev, z, r, n, un_h};
  return h;
}

GruStepGrad gru_cell_backward(const GruCache &c, const Vector &dh_next,
                              const GruParams &params, GruParams &g) {
  if (dh_next.size() != params.hidden_size())
    throw std::invalid_argument("gru_cell backward: shape mismatch");
  const Vector dn = dh_next.cwiseProduct((1.0 - c.z.array()).matrix());
  const Vector dz = dh_next.cwiseProduct(c.h_prev - c.n);
  const Vector da_n = dn.array() * (1.0 - c.n.array().square());
  const Vector dr = da_n.cwiseProduct(c.un_h);
  const Vector d_un_h = da_n.cwiseProduct(c.r);
  const Vector da_r = dr.array() * c.r.array() * (1.0 - c.r.array());
  const Vector da_z = dz.array() * c.z.array() * (1.0 - c.z.array());

  g.wn.noalias() += da_n * c.x.transpose();
  g.bn += da_n;
  g.un.noalias() += d_un_h * c.h_prev.transpose();
  g.wr.noalias() += da_r * c.x.transpose();
  g.ur.noalias() += da_r * c.h_prev.transpose();
  g.br += da_r;
  g.wz.noalias() += da_z * c.x.transpose();
  g.uz.noalias() += da_z * c.h_prev.transpose();
  g.bz += da_z;

  GruStepGrad out;
  out.dx = params.wn.transpose() * da_n + params.wr.transpose() * da_r +
           params.wz.transpose() * da_z;
  out.dh_prev = dh_next.cwiseProduct(c.z) + params.un.transpose() * d_un_h +
                params.ur.transpose() * da_r + params.uz.transpose() * da_z;
  return out;
}

Vector FeatureMap::cell(int y, int x) const {
  Vector v(channels);
  for (int ch = 0; ch < channels; ++ch)
    v[ch] = at(y, x, ch);
  return v;
}

std::vector<Vector> sequence_cells(const FeatureMap &map, int pad) {
  if (pad < 0 || pad >= map.width)
    throw std::invalid_argument("sequence_cells: pad must satisfy 0 <= pad < width");
  std::vector<Vector> cells;
  cells.reserve(static_cast<std::size_t>(map.height) * (map.width + pad));
  for (int y = 0; y < map.height; ++y) {
    for (int x = map.width - pad; x < map.width; ++x)
      cells.push_back(map.cell(y, x));
    for (int x = 0; x < map.width; ++x)
      cells.push_back(map.cell(y, x));
  }
  return cells;
}

FeatureMap stack_cells(const std::vector<Vector> &cells, int height, int width, int pad) {
  if (pad < 0 || pad >= width)
    throw std::invalid_argument("stack_cells: pad must satisfy 0 <= pad < width");
  const std::size_t stride = static_cast<std::size_t>(width + pad);
  if (cells.size() != static_cast<std::size_t>(height) * stride)
    throw std::invalid_argument("stack_cells: sequence length does not match map shape");
  const int channels = cells.empty() ? 0 : static_cast<int>(cells.front().size());
  FeatureMap map(height, width, channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Vector &v = cells[static_cast<std::size_t>(y) * stride + pad + x];
      for (int ch = 0; ch < channels; ++ch)
        map.at(y, x, ch) = v[ch];
    }
  return map;
}

GruSequenceResult gru_sequence(const std::vector<Vector> &inputs, const Vector &h0,
                               const GruParams &params) {
  GruSequenceResult out;
  out.outputs.reserve(inputs.size());
  out.caches.resize(inputs.size());
  Vector h = h0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    h = gru_cell(inputs[t], h, params, &out.caches[t]);
    out.outputs.push_back(h);
  }
  return out;
}

std::vector<Vector> gru_sequence_backward(const GruSequenceResult &fwd,
                                          const std::vector<Vector> &d_outputs,
                                          const GruParams &params, GruParams &grads) {
  if (d_outputs.size() != fwd.caches.size())
    throw std::invalid_argument("gru_sequence_backward: gradient count mismatch");
  std::vector<Vector> dx(fwd.caches.size());
  Vector carry = Vector::Zero(params.hidden_size());
  for (std::size_t t = fwd.caches.size(); t-- > 0;) {
    const GruStepGrad step = gru_cell_backward(fwd.caches[t], d_outputs[t] + carry, params, grads);
    dx[t] = step.dx;
    carry = step.dh_prev;
  }
  return dx;
}

FeatureMap gru_feature_map(const FeatureMap &map, int pad, const GruParams &params) {
  if (params.input_size() != map.channels || params.hidden_size() != map.channels)
    throw std::invalid_argument("gru_feature_map: hidden and input size must equal channels");
  const auto seq = gru_sequence(sequence_cells(map, pad), Vector::Zero(map.channels), params);
  return stack_cells(seq.outputs, map.height, map.width, pad);
}

FeatureMap gru_feature_map_backward(const FeatureMap &map, int pad, const GruParams &params,
                                    const FeatureMap &d_out, GruParams &grads) {
  if (d_out.height != map.height || d_out.width != map.width ||
      d_out.channels != map.channels)
    throw std::invalid_argument("gru_feature_map_backward: gradient shape mismatch");
  const auto fwd = gru_sequence(sequence_cells(map, pad), Vector::Zero(map.channels), params);
  // pad outputs are dropped by stack_cells, so they receive no output gradient
  std::vector<Vector> d_outputs(fwd.outputs.size(), Vector::Zero(map.channels));
  const std::size_t stride = static_cast<std::size_t>(map.width + pad);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x)
      d_outputs[static_cast<std::size_t>(y) * stride + pad + x] = d_out.cell(y, x);
  auto dx = gru_sequence_backward(fwd, d_outputs, params, grads);
  // pad cells are copies of the row's last columns
  for (int y = 0; y < map.height; ++y)
    for (int t = 0; t < pad; ++t) {
      const std::size_t base = static_cast<std::size_t>(y) * stride;
      dx[base + pad + static_cast<std::size_t>(map.width - pad + t)] += dx[base + t];
    }
  return stack_cells(dx, map.height, map.width, pad);
}

// ---------------------------------------------------------------------------
// Optimization

double one_cycle_lr(double step, double total, const OneCycle &s) {
  if (!(total > 0.0))
    throw std::invalid_argument("one_cycle_lr: total steps must be positive");
  if (step < 0.0 || step > total)
    throw std::invalid_argument("one_cycle_lr: step outside [0, total]");
  const double lr_start = s.lr_max / s.start_div;
  const double lr_end = s.lr_max / s.end_div;
  const double warm = s.warmup_frac * total;
  if (step <= warm) {
    if (warm <= 0.0)
      return s.lr_max;
    const double t = step / warm;
    return s.lr_max - (s.lr_max - lr_start) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
  const double t = (step - warm) / (total - warm);
  return lr_end + (s.lr_max - lr_end) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double TrainState::current_lr() const {
  return one_cycle_lr(static_cast<double>(step), static_cast<double>(total_steps), schedule);
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, double lr, double momentum,
              std::vector<std::vector<double>> &velocity) {
  if (params.size() != grads.size())
    throw std::invalid_argument("sgd_step: parameter/gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size())
      throw std::invalid_argument("sgd_step: block " + std::to_string(b) + " shape mismatch");
    for (double v : grads[b])
      if (!std::isfinite(v))
        throw DivergenceError("non-finite gradient in parameter block " + std::to_string(b));
  }
  if (velocity.size() != params.size()) {
    velocity.assign(params.size(), {});
    for (std::size_t b = 0; b < params.size(); ++b)
      velocity[b].assign(params[b].size(), 0.0);
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto &v = velocity[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      v[i] = momentum * v[i] + grads[b][i];
      params[b][i] -= lr * v[i];
    }
  }
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, TrainState &state) {
  if (state.step >= state.total_steps)
    throw std::invalid_argument("sgd_step: schedule exhausted");
  sgd_step(params, grads, state.current_lr(), state.momentum, state.velocity);
  ++state.step;
}

Vector finite_difference_grad(const std::function<double(const Vector &)> &f,
                              const Vector &params, double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("finite_difference_grad: epsilon must be positive");
  Vector grad(params.size());
  Vector probe = params;
  for (Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + epsilon;
    const double up = f(probe);
    probe[i] = params[i] - epsilon;
    const double down = f(probe);
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw DivergenceError("finite_difference_grad: non-finite function value");
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double max_relative_error(const Vector &analytic, const Vector &numeric, double floor) {
  if (analytic.size() != numeric.size())
    throw std::invalid_argument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], b = numeric[i];
    const double scale = std::max({std::abs(a), std::abs(b), floor});
    worst = std::max(worst, std::abs(a - b) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

Tensor to_tensor(const Matrix &m) {
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      t.values.push_back(m(r, c));
  return t;
}

Tensor to_tensor(const Vector &v) {
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(v.size())};
  t.values.assign(v.data(), v.data() + v.size());
  return t;
}

Matrix matrix_from(const Tensor &t) {
  if (t.shape.size() != 2)
    throw DataError("checkpoint tensor is not a matrix");
  Matrix m(t.shape[0], t.shape[1]);
  std::size_t i = 0;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      m(r, c) = t.values[i++];
  return m;
}

Vector vector_from(const Tensor &t) {
  if (t.shape.size() != 1)
    throw DataError("checkpoint tensor is not a vector");
  return Eigen::Map<const Vector>(t.values.data(), static_cast<Index>(t.values.size()));
}

Bytes write_checkpoint(const Checkpoint &ckpt) {
  Bytes out{'A', 'M', 'V', 'M'};
  le::put_u16(out, kCheckpointVersion);
  le::put_u16(out, ckpt.num_classes);
  le::put_u16(out, ckpt.neighbors);
  le::put_u16(out, static_cast<std::uint16_t>(ckpt.tensors.size()));
  for (const Tensor &t : ckpt.tensors) {
    std::size_t count = 1;
    for (std::uint32_t d : t.shape)
      count *= d;
    if (count != t.values.size())
      throw DataError("checkpoint tensor shape does not match payload");
    le::put_u16(out, static_cast<std::uint16_t>(t.shape.size()));
    for (std::uint32_t d : t.shape)
      le::put_u32(out, d);
    for (double v : t.values)
      le::put_f64(out, v);
  }
  return out;
}

Checkpoint read_checkpoint(ByteView bytes) {
  if (bytes.size() < 12 || bytes[0] != 'A' || bytes[1] != 'M' || bytes[2] != 'V' ||
      bytes[3] != 'M')
    throw DataError("bad magic: not an AMVM checkpoint");
  if (le::get_u16(bytes, 4) != kCheckpointVersion)
    throw DataError("unsupported checkpoint version");
  Checkpoint ckpt;
  ckpt.num_classes = le::get_u16(bytes, 6);
  ckpt.neighbors = le::get_u16(bytes, 8);
  const std::uint16_t count = le::get_u16(bytes, 10);
  std::size_t at = 12;
  const auto need = [&](std::size_t n) {
    if (bytes.size() - at < n)
      throw DataError("checkpoint truncated");
  };
  for (std::uint16_t k = 0; k < count; ++k) {
    need(2);
    Tensor t;
    t.shape.resize(le::get_u16(bytes, at));
    at += 2;
    need(4 * t.shape.size());
    std::size_t elems = 1;
    for (auto &d : t.shape) {
      d = le::get_u32(bytes, at);
      at += 4;
      elems *= d;
    }
    need(8 * elems);
    t.values.resize(elems);
    for (double &v : t.values) {
      v = le::get_f64(bytes, at);
      at += 8;
    }
    ckpt.tensors.push_back(std::move(t));
  }
  if (at != bytes.size())
    throw DataError("trailing bytes after checkpoint tensors");
  return ckpt;
}

} // namespace amv::nn

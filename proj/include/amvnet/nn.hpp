// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   nn.hpp
 * @brief  Small neural-network primitives with hand-written backward passes.
 *
 * Everything runs in double precision. Batched tensors are Eigen matrices
 * with one sample per row.
 */
#pragma once

#include "amvnet/io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace amv::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct DenseGrad {
  Matrix weight;
  Vector bias;

  void zero_like(Index out, Index in);
};

/// y = W x + b. Weight is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  DenseLayer() = default;
  DenseLayer(Index in, Index out) : weight(Matrix::Zero(out, in)), bias(Vector::Zero(out)) {}

  Index in_features() const { return weight.cols(); }
  Index out_features() const { return weight.rows(); }
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(weight.size() + bias.size());
  }

  Vector forward(const Vector &x) const;
  /// Batched forward, x is batch x in.
  Matrix forward(const Matrix &x) const;
  /// Returns dL/dx and accumulates dL/dW, dL/db into grad.
  Matrix backward(const Matrix &x, const Matrix &dy, DenseGrad &grad) const;
};

Matrix relu(const Matrix &x);
/// Passes dy where x > 0; the subgradient at 0 is 0.
Matrix relu_backward(const Matrix &x, const Matrix &dy);

struct MaxPoolResult {
  Vector values;
  std::vector<Index> argmax_row; ///< per column, lowest row on ties
};

/// Column-wise maximum over the rows of a set.
MaxPoolResult set_maxpool(const Matrix &set);
/// Routes each column's gradient to its argmax row.
Matrix set_maxpool_backward(const MaxPoolResult &pooled, const Vector &dy, Index rows);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

Vector softmax(const Vector &logits);

/// -w_t log softmax(logits)_t and its gradient w_t (p - onehot_t).
/// Empty weights means all ones.
LossAndGrad softmax_ce(const Vector &logits, std::uint32_t target,
                       std::span<const double> class_weights = {});

/// Soft Dice averaged over classes, with smoothing epsilon.
LossAndGrad dice_loss(const Matrix &probs, const Matrix &onehot, double epsilon = 1.0);

// ---------------------------------------------------------------------------
// GRU

/**
 * Gate layout:
 *   z = sigmoid(Wz x + Uz h + bz)
 *   r = sigmoid(Wr x + Ur h + br)
 *   n = tanh(Wn x + bn + r * (Un h))
 *   h' = (1 - z) * n + z * h
 */
struct GruParams {
  Matrix wz, wr, wn; ///< hidden x input
  Matrix uz, ur, un; ///< hidden x hidden
  Vector bz, br, bn;

  static GruParams zeros(Index input, Index hidden);
  Index input_size() const { return wz.cols(); }
  Index hidden_size() const { return wz.rows(); }

  /// Parameter blocks in a fixed order, for optimizers and gradient checks.
  std::vector<std::span<double>> blocks();
};

struct GruCache {
  Vector x, h_prev, z, r, n, un_h;
};

Vector gru_cell(const Vector &x, const Vector &h_prev, const GruParams &params,
                GruCache *cache = nullptr);

struct GruStepGrad {
  Vector dx;
  Vector dh_prev;
};

/// Accumulates parameter gradients into grads (same shapes as params).
GruStepGrad gru_cell_backward(const GruCache &cache, const Vector &dh_next,
                              const GruParams &params, GruParams &grads);

/// h x w x c feature map, channel-last.
struct FeatureMap {
  int height = 0, width = 0, channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0) {}
  double &at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }
  Vector cell(int y, int x) const;

  friend bool operator==(const FeatureMap &, const FeatureMap &) = default;
};

/**
 * Flattens a map into a cell sequence, row by row. Each row is prefixed with
 * copies of its last `pad` columns so a recurrent state arrives warm at the
 * first true column. Sequence length is height * (width + pad).
 */
std::vector<Vector> sequence_cells(const FeatureMap &map, int pad);

/// Inverse of sequence_cells: drops the pad outputs and restores h x w x c.
FeatureMap stack_cells(const std::vector<Vector> &cells, int height, int width, int pad);

struct GruSequenceResult {
  std::vector<Vector> outputs;
  std::vector<GruCache> caches;
};

/// Runs the cell over the whole sequence from h0.
GruSequenceResult gru_sequence(const std::vector<Vector> &inputs, const Vector &h0,
                               const GruParams &params);

/// Backpropagation through time. d_outputs has one entry per step; returns
/// input gradients per step and accumulates parameter gradients.
std::vector<Vector> gru_sequence_backward(const GruSequenceResult &fwd,
                                          const std::vector<Vector> &d_outputs,
                                          const GruParams &params, GruParams &grads);

/// Map-level recurrent layer: circular pad, GRU over the flattened
/// sequence, stack back. Hidden size must equal the channel count.
FeatureMap gru_feature_map(const FeatureMap &map, int pad, const GruParams &params);

/// Input gradient of gru_feature_map. Pad cells are copies, so their
/// gradient is added to the cells they were copied from.
FeatureMap gru_feature_map_backward(const FeatureMap &map, int pad, const GruParams &params,
                                    const FeatureMap &d_out, GruParams &grads);

// ---------------------------------------------------------------------------
// Optimization

struct OneCycle {
  double lr_max = 0.01;
  double warmup_frac = 0.3;
  double start_div = 25.0;
  double end_div = 1e4;
};

/// Cosine warm-up from lr_max/start_div to lr_max over warmup_frac*total
/// steps, then cosine decay to lr_max/end_div at step == total.
double one_cycle_lr(double step, double total, const OneCycle &schedule);

struct TrainState {
  std::size_t step = 0;
  std::size_t total_steps = 0;
  OneCycle schedule;
  double momentum = 0.9;
  std::vector<std::vector<double>> velocity;

  double current_lr() const;
};

/// v <- momentum v + g ; p <- p - lr v. Throws DivergenceError on a
/// non-finite gradient.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, double lr, double momentum,
              std::vector<std::vector<double>> &velocity);

/// Uses the one-cycle rate for state.step, then advances the step.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, TrainState &state);

/// Central differences of f around params.
Vector finite_difference_grad(const std::function<double(const Vector &)> &f,
                              const Vector &params, double epsilon = 1e-6);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(const Vector &analytic, const Vector &numeric, double floor = 1e-6);

// ---------------------------------------------------------------------------
// Checkpoints

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<double> values;

  friend bool operator==(const Tensor &, const Tensor &) = default;
};

struct Checkpoint {
  std::uint16_t num_classes = 0;
  std::uint16_t neighbors = 0;
  std::vector<Tensor> tensors;

  friend bool operator==(const Checkpoint &, const Checkpoint &) = default;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

/**
 * "AMVM" | u16 version | u16 num_classes | u16 neighbors | u16 tensor count,
 * then per tensor: u16 ndims | u32 dims[ndims] | float64 payload (row-major).
 */
Bytes write_checkpoint(const Checkpoint &ckpt);
Checkpoint read_checkpoint(ByteView bytes);

Tensor to_tensor(const Matrix &m);
Tensor to_tensor(const Vector &v);
Matrix matrix_from(const Tensor &t);
Vector vector_from(const Tensor &t);

} // namespace amv::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "s2wef/matrix.hpp"

namespace s2wef::nn {

/// One dense layer: outputs = inputs * weight + bias, weight is fan_in x fan_out.
struct Layer {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Parameters of a feed-forward classifier (tanh hidden units, softmax output).
///
/// The penultimate weight matrix is the one feeding the output layer. It is
/// the input to WEF construction and is stored as H x W = hidden x classes.
struct ModelWeights {
  std::vector<Layer> layers;

  std::size_t penultimate_index() const { return layers.size() - 1; }
  const Matrix& penultimate() const { return layers.back().weight; }
  Matrix& penultimate() { return layers.back().weight; }

  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t class_count() const { return layers.back().weight.cols(); }
  std::size_t parameter_count() const;
  std::vector<std::size_t> architecture() const;

  bool same_shape(const ModelWeights& other) const;
  bool all_finite() const;

  /// 64-bit FNV-1a over the raw parameter bytes, in layer order.
  std::uint64_t digest() const;

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

/// Applies `op(a, b)` parameter-wise; shapes must agree.
template <typename Op>
ModelWeights zip_with(const ModelWeights& a, const ModelWeights& b, Op op) {
  if (!a.same_shape(b)) throw ShapeError("model shapes differ");
  ModelWeights out = a;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    auto w = out.layers[l].weight.values();
    auto bw = b.layers[l].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = op(w[i], bw[i]);
    auto& bias = out.layers[l].bias;
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = op(bias[i], b.layers[l].bias[i]);
  }
  return out;
}

/// Applies `op(x)` to every parameter, in layer order (weights then bias).
template <typename Op>
ModelWeights map_params(const ModelWeights& a, Op op) {
  ModelWeights out = a;
  for (auto& layer : out.layers) {
    for (double& w : layer.weight.values()) w = op(w);
    for (double& b : layer.bias) b = op(b);
  }
  return out;
}

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.0;
  std::size_t batch_size = 32;
  /// Number of mini-batch SGD steps per round (e).
  std::size_t local_iterations = 5;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct DatasetShard {
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  /// Throws ConfigError on empty shards or out-of-range labels.
  void validate() const;
};

/// Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
/// `architecture` lists layer widths from input to output, at least two entries.
ModelWeights init_model(std::span<const std::size_t> architecture, std::uint64_t seed);

struct LossGradient {
  double loss = 0.0;
  ModelWeights gradient;
};

/// Mean cross-entropy and its gradient over the selected samples.
LossGradient loss_and_gradient(const ModelWeights& w, const DatasetShard& shard,
                               std::span<const std::size_t> indices);

double mean_loss(const ModelWeights& w, const DatasetShard& shard);

struct TrainResult {
  ModelWeights weights;
  /// Penultimate matrix before training and after each SGD step (e + 1 entries).
  std::vector<Matrix> snapshots;
};

/// Runs cfg.local_iterations mini-batch SGD steps (with momentum) starting
/// from `start`. Batches come from a reshuffled pass over the shard, drawn
/// from a stream seeded by `seed`.
TrainResult local_train(const ModelWeights& start, const DatasetShard& shard,
                        const TrainConfig& cfg, std::uint64_t seed);

/// Logits for one sample.
std::vector<double> forward(const ModelWeights& w, std::span<const double> x);

/// Index of the largest logit; ties go to the lowest class index.
std::size_t predict(const ModelWeights& w, std::span<const double> x);

double evaluate_accuracy(const ModelWeights& w, const DatasetShard& shard);

}  // namespace s2wef::nn

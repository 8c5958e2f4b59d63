#include "s2wef/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "s2wef/rng.hpp"

namespace s2wef::nn {

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::size_t> ModelWeights::architecture() const {
  std::vector<std::size_t> arch;
  if (layers.empty()) return arch;
  arch.push_back(layers.front().weight.rows());
  for (const auto& layer : layers) arch.push_back(layer.weight.cols());
  return arch;
}

bool ModelWeights::same_shape(const ModelWeights& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].weight.same_shape(other.layers[l].weight) ||
        layers[l].bias.size() != other.layers[l].bias.size()) {
      return false;
    }
  }
  return true;
}

bool ModelWeights::all_finite() const {
  for (const auto& layer : layers) {
    for (double w : layer.weight.values()) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

namespace {

void fnv_mix(std::uint64_t& h, double v) {
  unsigned char bytes[sizeof(double)];
  std::memcpy(bytes, &v, sizeof(double));
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::uint64_t ModelWeights::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& layer : layers) {
    for (double w : layer.weight.values()) fnv_mix(h, w);
    for (double b : layer.bias) fnv_mix(h, b);
  }
  return h;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0) || !std::isfinite(momentum)) {
    throw ConfigError("momentum must be finite and non-negative");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (local_iterations < 1) throw ConfigError("local_iterations must be at least 1");
}

void DatasetShard::validate() const {
  if (labels.empty()) throw ConfigError("dataset shard is empty");
  if (features.size() != labels.size()) {
    throw ConfigError("dataset shard has mismatched feature and label counts");
  }
  for (std::size_t label : labels) {
    if (label >= class_count) {
      throw ConfigError("label " + std::to_string(label) + " out of range for " +
                        std::to_string(class_count) + " classes");
    }
  }
}

ModelWeights init_model(std::span<const std::size_t> architecture, std::uint64_t seed) {
  if (architecture.size() < 2) {
    throw ConfigError("architecture needs an input width and at least one layer");
  }
  for (std::size_t width : architecture) {
    if (width == 0) throw ConfigError("architecture widths must be positive");
  }
  Rng rng(seed);
  ModelWeights w;
  for (std::size_t l = 0; l + 1 < architecture.size(); ++l) {
    const std::size_t fan_in = architecture[l];
    const std::size_t fan_out = architecture[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out)};
    for (double& v : layer.weight.values()) v = rng.uniform(-bound, bound);
    for (double& v : layer.bias) v = rng.uniform(-bound, bound);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

namespace {

void check_input(const ModelWeights& w, const DatasetShard& shard) {
  if (w.layers.empty()) throw ConfigError("model has no layers");
  shard.validate();
  if (shard.class_count != w.class_count()) {
    throw ShapeError("shard has " + std::to_string(shard.class_count) +
                     " classes, model outputs " + std::to_string(w.class_count()));
  }
  for (const auto& x : shard.features) {
    if (x.size() != w.input_dim()) {
      throw ShapeError("feature vector of length " + std::to_string(x.size()) +
                       " does not match model input width " +
                       std::to_string(w.input_dim()));
    }
  }
}

// activations[0] is the input; activations[l + 1] is the output of layer l
// (tanh for hidden layers, raw logits for the last one).
std::vector<std::vector<double>> forward_all(const ModelWeights& w, std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  acts.reserve(w.layers.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const Layer& layer = w.layers[l];
    const auto& in = acts.back();
    std::vector<double> out(layer.bias);
    for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
      const double a = in[i];
      for (std::size_t j = 0; j < layer.weight.cols(); ++j) out[j] += a * layer.weight(i, j);
    }
    if (l + 1 < w.layers.size()) {
      for (double& v : out) v = std::tanh(v);
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

ModelWeights zeros_like(const ModelWeights& w) {
  return map_params(w, [](double) { return 0.0; });
}

}  // namespace

LossGradient loss_and_gradient(const ModelWeights& w, const DatasetShard& shard,
                               std::span<const std::size_t> indices) {
  check_input(w, shard);
  if (indices.empty()) throw ConfigError("empty mini-batch");
  LossGradient out{0.0, zeros_like(w)};
  const std::size_t depth = w.layers.size();
  for (std::size_t idx : indices) {
    const auto acts = forward_all(w, shard.features.at(idx));
    const auto p = softmax(acts.back());
    const std::size_t y = shard.labels[idx];
    out.loss += -std::log(std::max(p[y], 1e-300));

    std::vector<double> delta = p;
    delta[y] -= 1.0;
    for (std::size_t l = depth; l-- > 0;) {
      const Layer& layer = w.layers[l];
      Layer& grad = out.gradient.layers[l];
      const auto& in = acts[l];
      for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
        for (std::size_t j = 0; j < layer.weight.cols(); ++j) grad.weight(i, j) += in[i] * delta[j];
      }
      for (std::size_t j = 0; j < delta.size(); ++j) grad.bias[j] += delta[j];
      if (l == 0) break;
      std::vector<double> back(layer.weight.rows(), 0.0);
      for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < layer.weight.cols(); ++j) s += layer.weight(i, j) * delta[j];
        back[i] = s * (1.0 - in[i] * in[i]);
      }
      delta = std::move(back);
    }
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  out.loss *= scale;
  out.gradient = map_params(out.gradient, [scale](double g) { return g * scale; });
  return out;
}

double mean_loss(const ModelWeights& w, const DatasetShard& shard) {
  check_input(w, shard);
  double loss = 0.0;
  for (std::size_t i = 0; i < shard.size(); ++i) {
    const auto acts = forward_all(w, shard.features[i]);
    const auto p = softmax(acts.back());
    loss += -std::log(std::max(p[shard.labels[i]], 1e-300));
  }
  return loss / static_cast<double>(shard.size());
}

TrainResult local_train(const ModelWeights& start, const DatasetShard& shard,
                        const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_input(start, shard);

  Rng rng(seed);
  std::vector<std::size_t> order(shard.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;
  const std::size_t batch = std::min(cfg.batch_size, shard.size());

  TrainResult result{start, {}};
  result.snapshots.reserve(cfg.local_iterations + 1);
  result.snapshots.push_back(start.penultimate());
  ModelWeights velocity = zeros_like(start);

  std::vector<std::size_t> indices(batch);
  for (std::size_t t = 1; t <= cfg.local_iterations; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      indices[b] = order[cursor++];
    }
    const LossGradient lg = loss_and_gradient(result.weights, shard, indices);
    if (!std::isfinite(lg.loss)) {
      throw NumericError("non-finite loss at local iteration " + std::to_string(t));
    }
    velocity = zip_with(velocity, lg.gradient,
                        [mu = cfg.momentum](double v, double g) { return mu * v + g; });
    result.weights = zip_with(result.weights, velocity,
                              [lr = cfg.learning_rate](double w, double v) { return w - lr * v; });
    if (!result.weights.all_finite()) {
      throw NumericError("non-finite weights after local iteration " + std::to_string(t));
    }
    result.snapshots.push_back(result.weights.penultimate());
  }
  return result;
}

std::vector<double> forward(const ModelWeights& w, std::span<const double> x) {
  if (x.size() != w.input_dim()) throw ShapeError("input width does not match model");
  return forward_all(w, x).back();
}

std::size_t predict(const ModelWeights& w, std::span<const double> x) {
  const auto logits = forward(w, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return best;
}

double evaluate_accuracy(const ModelWeights& w, const DatasetShard& shard) {
  check_input(w, shard);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < shard.size(); ++i) {
    if (predict(w, shard.features[i]) == shard.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(shard.size());
}

}  // namespace s2wef::nn

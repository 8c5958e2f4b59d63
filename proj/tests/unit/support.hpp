#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "s2wef/matrix.hpp"
#include "s2wef/nn.hpp"
#include "s2wef/wef.hpp"

namespace testing {

// Test-side randomness uses the standard distributions on purpose, so test
// inputs do not share code with the library's own samplers.
inline s2wef::Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                   double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  s2wef::Matrix m(rows, cols);
  for (double& v : m.values()) v = d(gen);
  return m;
}

inline s2wef::wef::WefMatrix random_wef(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                        int bound) {
  std::uniform_int_distribution<int> d(0, bound);
  std::vector<int> counts(rows * cols);
  for (int& c : counts) c = d(gen);
  return {rows, cols, bound, counts};
}

inline s2wef::nn::ModelWeights random_model(std::mt19937_64& gen,
                                            const std::vector<std::size_t>& arch,
                                            double scale = 0.5) {
  s2wef::nn::ModelWeights w = s2wef::nn::init_model(arch, gen());
  std::normal_distribution<double> d(0.0, scale);
  for (auto& layer : w.layers) {
    for (double& v : layer.weight.values()) v = d(gen);
    for (double& b : layer.bias) b = d(gen);
  }
  return w;
}

inline s2wef::nn::DatasetShard random_shard(std::mt19937_64& gen, std::size_t n, std::size_t dim,
                                            std::size_t classes) {
  std::normal_distribution<double> d(0.0, 1.0);
  s2wef::nn::DatasetShard s;
  s.class_count = classes;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    for (double& v : x) v = d(gen);
    s.features.push_back(x);
    s.labels.push_back(i % classes);
  }
  return s;
}

}  // namespace testing

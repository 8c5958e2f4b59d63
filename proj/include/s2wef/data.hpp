#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "s2wef/nn.hpp"

namespace s2wef::fedsim {

/// Seeded Gaussian-blob classification data.
struct DatasetParams {
  std::size_t classes = 2;
  std::size_t features = 8;
  std::size_t samples = 2000;
  std::size_t test_samples = 1000;
  /// Distance of each class mean from the origin; clusters have unit variance.
  double separation = 1.0;

  void validate() const;
  friend bool operator==(const DatasetParams&, const DatasetParams&) = default;
};

struct BlobData {
  nn::DatasetShard train;
  nn::DatasetShard test;
};

/// Two classes sit at +/- separation * u for a random unit vector u; with
/// more classes each mean is separation times its own random unit vector.
/// Labels are balanced round-robin and train/test share the class means.
BlobData make_blobs(const DatasetParams& params, std::uint64_t seed);

/// Random equal-size disjoint shards; the remainder is dropped.
std::vector<nn::DatasetShard> partition_iid(const nn::DatasetShard& data, std::size_t clients,
                                            std::uint64_t seed);

/// Per class, proportions drawn from Dirichlet(beta * 1_N). Any empty shard
/// then takes one sample from the currently largest shard.
std::vector<nn::DatasetShard> partition_dirichlet(const nn::DatasetShard& data,
                                                  std::size_t clients, double beta,
                                                  std::uint64_t seed);

}  // namespace s2wef::fedsim

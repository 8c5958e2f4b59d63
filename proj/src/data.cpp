#include "s2wef/data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "s2wef/rng.hpp"

namespace s2wef::fedsim {

void DatasetParams::validate() const {
  if (classes < 2) throw ConfigError("dataset needs at least two classes");
  if (features < 1) throw ConfigError("dataset needs at least one feature");
  if (samples < classes) throw ConfigError("dataset needs at least one sample per class");
  if (test_samples < 1) throw ConfigError("dataset needs a nonempty test split");
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw ConfigError("separation must be finite and non-negative");
  }
}

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> u(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

nn::DatasetShard sample_blobs(const std::vector<std::vector<double>>& means, std::size_t n,
                              Rng& rng) {
  nn::DatasetShard shard;
  shard.class_count = means.size();
  shard.features.reserve(n);
  shard.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % means.size();
    std::vector<double> x(means[label]);
    for (double& v : x) v += rng.normal();
    shard.features.push_back(std::move(x));
    shard.labels.push_back(label);
  }
  return shard;
}

nn::DatasetShard subset(const nn::DatasetShard& data, const std::vector<std::size_t>& idx) {
  nn::DatasetShard out;
  out.class_count = data.class_count;
  out.features.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    out.features.push_back(data.features[i]);
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

}  // namespace

BlobData make_blobs(const DatasetParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  std::vector<std::vector<double>> means;
  if (params.classes == 2) {
    auto u = random_unit(rng, params.features);
    for (double& v : u) v *= params.separation;
    auto neg = u;
    for (double& v : neg) v = -v;
    means = {u, neg};
  } else {
    for (std::size_t c = 0; c < params.classes; ++c) {
      auto u = random_unit(rng, params.features);
      for (double& v : u) v *= params.separation;
      means.push_back(std::move(u));
    }
  }
  BlobData out;
  out.train = sample_blobs(means, params.samples, rng);
  out.test = sample_blobs(means, params.test_samples, rng);
  return out;
}

std::vector<nn::DatasetShard> partition_iid(const nn::DatasetShard& data, std::size_t clients,
                                            std::uint64_t seed) {
  if (clients < 1) throw ConfigError("partition needs at least one client");
  if (data.size() < clients) {
    throw ConfigError("dataset of " + std::to_string(data.size()) + " samples is too small for " +
                      std::to_string(clients) + " clients");
  }
  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t per = data.size() / clients;
  std::vector<nn::DatasetShard> shards;
  shards.reserve(clients);
  for (std::size_t c = 0; c < clients; ++c) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(c * per),
                                 order.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
    shards.push_back(subset(data, idx));
  }
  return shards;
}

std::vector<nn::DatasetShard> partition_dirichlet(const nn::DatasetShard& data,
                                                  std::size_t clients, double beta,
                                                  std::uint64_t seed) {
  if (clients < 1) throw ConfigError("partition needs at least one client");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("Dirichlet beta must be positive");
  if (data.size() < clients) {
    throw ConfigError("dataset of " + std::to_string(data.size()) + " samples is too small for " +
                      std::to_string(clients) + " clients");
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(data.class_count);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  std::vector<std::vector<std::size_t>> assigned(clients);
  for (auto& members : by_class) {
    if (members.empty()) throw ConfigError("Dirichlet partition needs every class present");
    rng.shuffle(members);
    std::vector<double> p(clients);
    double total = 0.0;
    for (double& v : p) {
      v = rng.gamma(beta);
      total += v;
    }
    // Cut points at rounded cumulative proportions.
    double cumulative = 0.0;
    std::size_t start = 0;
    for (std::size_t c = 0; c < clients; ++c) {
      cumulative += p[c];
      std::size_t end = c + 1 == clients
                            ? members.size()
                            : static_cast<std::size_t>(std::llround(
                                  cumulative / total * static_cast<double>(members.size())));
      end = std::clamp(end, start, members.size());
      assigned[c].insert(assigned[c].end(), members.begin() + static_cast<std::ptrdiff_t>(start),
                         members.begin() + static_cast<std::ptrdiff_t>(end));
      start = end;
    }
  }

  for (std::size_t c = 0; c < clients; ++c) {
    if (!assigned[c].empty()) continue;
    std::size_t largest = 0;
    for (std::size_t k = 1; k < clients; ++k) {
      if (assigned[k].size() > assigned[largest].size()) largest = k;
    }
    assigned[c].push_back(assigned[largest].back());
    assigned[largest].pop_back();
  }

  std::vector<nn::DatasetShard> shards;
  shards.reserve(clients);
  for (auto& idx : assigned) {
    std::sort(idx.begin(), idx.end());
    shards.push_back(subset(data, idx));
  }
  return shards;
}

}  // namespace s2wef::fedsim

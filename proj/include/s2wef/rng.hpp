#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace s2wef {

/// Mixes a base seed with a list of stream tags (trial, round, client, ...)
/// into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Seeded pseudorandom stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The samplers below are written out rather than taken from
/// <random> because the standard distributions are implementation-defined,
/// and traces must be identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Box-Muller, one draw per call).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t index(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace s2wef

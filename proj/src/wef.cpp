#include "s2wef/wef.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace s2wef::wef {

WefMatrix::WefMatrix(std::size_t rows, std::size_t cols, int bound)
    : rows_(rows), cols_(cols), bound_(bound), counts_(rows * cols, 0) {}

WefMatrix::WefMatrix(std::size_t rows, std::size_t cols, int bound, std::vector<int> counts)
    : rows_(rows), cols_(cols), bound_(bound), counts_(std::move(counts)) {
  if (counts_.size() != rows_ * cols_) throw ShapeError("WEF counts do not match shape");
  for (int c : counts_) {
    if (c < 0 || c > bound_) {
      throw ConfigError("WEF entry " + std::to_string(c) + " outside [0, " +
                        std::to_string(bound_) + "]");
    }
  }
}

bool WefMatrix::all_zero() const {
  return std::all_of(counts_.begin(), counts_.end(), [](int c) { return c == 0; });
}

int WefMatrix::max_entry() const {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

double dynamic_threshold(const Matrix& prev, const Matrix& curr) {
  require_same_shape(prev, curr, "dynamic_threshold");
  if (prev.empty()) throw ShapeError("dynamic_threshold on an empty matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) sum += std::abs(curr[i] - prev[i]);
  return sum / static_cast<double>(prev.size());
}

WefMatrix wef_step(const WefMatrix& f, const Matrix& prev, const Matrix& curr) {
  require_same_shape(prev, curr, "wef_step");
  if (f.rows() != prev.rows() || f.cols() != prev.cols()) {
    throw ShapeError("wef_step: WEF matrix shape does not match weights");
  }
  const double alpha = dynamic_threshold(prev, curr);
  WefMatrix out = f;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    if (std::abs(curr[i] - prev[i]) > alpha) out.increment(i);
  }
  return out;
}

WefMatrix build_wef(std::span<const Matrix> snapshots) {
  if (snapshots.empty()) throw ConfigError("build_wef needs at least one snapshot");
  const Matrix& first = snapshots.front();
  for (const Matrix& s : snapshots) require_same_shape(first, s, "build_wef snapshot");
  const int e = static_cast<int>(snapshots.size() - 1);
  // Bound is e from the start so intermediate matrices stay valid.
  WefMatrix f(first.rows(), first.cols(), e);
  for (std::size_t t = 1; t < snapshots.size(); ++t) {
    f = wef_step(f, snapshots[t - 1], snapshots[t]);
  }
  return f;
}

WefMatrix accumulate(std::span<const WefMatrix> history) {
  if (history.empty()) throw ConfigError("accumulate needs at least one WEF matrix");
  const WefMatrix& first = history.front();
  std::vector<int> sum(first.size(), 0);
  int bound = 0;
  for (const WefMatrix& f : history) {
    if (!f.same_shape(first)) throw ShapeError("accumulate: WEF shapes differ");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += f[i];
    bound += f.bound();
  }
  return WefMatrix(first.rows(), first.cols(), bound, std::move(sum));
}

WefMatrix counterfeit_one_step(const Matrix& fake, const Matrix& global, int e, bool use_abs) {
  require_same_shape(fake, global, "counterfeit_one_step");
  if (e < 1) throw ConfigError("counterfeit_one_step needs e >= 1");
  const double alpha = dynamic_threshold(global, fake);
  WefMatrix f(fake.rows(), fake.cols(), e);
  for (std::size_t i = 0; i < fake.size(); ++i) {
    const double diff = fake[i] - global[i];
    const double measured = use_abs ? std::abs(diff) : diff;
    if (measured > alpha) f.set(i, e);
  }
  return f;
}

}  // namespace s2wef::wef

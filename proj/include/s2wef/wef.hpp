#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s2wef/matrix.hpp"

namespace s2wef::wef {

/// H x W grid of weight-evolution counts, stored row-major.
///
/// `bound` is the largest value an entry may take: the local-iteration
/// budget e for a single round, or T * e after accumulating T rounds.
class WefMatrix {
 public:
  WefMatrix() = default;
  WefMatrix(std::size_t rows, std::size_t cols, int bound);
  WefMatrix(std::size_t rows, std::size_t cols, int bound, std::vector<int> counts);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return counts_.size(); }
  int bound() const { return bound_; }

  int operator()(std::size_t r, std::size_t c) const { return counts_[r * cols_ + c]; }
  int operator[](std::size_t i) const { return counts_[i]; }
  std::span<const int> counts() const { return counts_; }

  void increment(std::size_t i) { ++counts_[i]; }
  void set(std::size_t i, int value) { counts_[i] = value; }

  bool same_shape(const WefMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_zero() const;
  int max_entry() const;

  friend bool operator==(const WefMatrix&, const WefMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int bound_ = 0;
  std::vector<int> counts_;
};

/// Mean absolute entry-wise change between two weight matrices.
double dynamic_threshold(const Matrix& prev, const Matrix& curr);

/// One local iteration: increments entries whose absolute change strictly
/// exceeds the mean absolute change.
WefMatrix wef_step(const WefMatrix& f, const Matrix& prev, const Matrix& curr);

/// Starts from zeros and applies wef_step across consecutive snapshots.
/// The result's bound is snapshots.size() - 1.
WefMatrix build_wef(std::span<const Matrix> snapshots);

/// Entry-wise sum; the bound is the sum of the bounds.
WefMatrix accumulate(std::span<const WefMatrix> history);

/// One-step counterfeit: entries are e where the fake weights moved more than
/// their mean absolute change from the global model, 0 elsewhere. With
/// `use_abs` false the comparison uses the signed difference.
WefMatrix counterfeit_one_step(const Matrix& fake, const Matrix& global, int e, bool use_abs);

}  // namespace s2wef::wef

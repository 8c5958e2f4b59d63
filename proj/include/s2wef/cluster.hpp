#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace s2wef::detect {

/// A client's robust-standardized (gamma, Dev) pair.
struct Point2 {
  double z_gamma = 0.0;
  double z_dev = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

struct Merge {
  /// Cluster ids are the smallest member index; `left < right`.
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  /// Sorted members of the merged cluster.
  std::vector<std::size_t> members;
};

struct HacResult {
  std::vector<Merge> merges;
  /// Merge heights in order; nondecreasing for Ward linkage.
  std::vector<double> heights;
  /// Two-cluster cut: 0 for the cluster holding client 0, 1 for the other.
  std::vector<int> assignment;
};

/// Agglomerative clustering with Ward linkage on Euclidean distances,
/// updated with the Lance-Williams recurrence. Heights follow the usual
/// convention d(A,B) = sqrt(2|A||B|/(|A|+|B|)) * |centroid(A) - centroid(B)|.
/// Equal distances merge the lexicographically lowest (left, right) pair.
/// Needs at least two points.
HacResult ward_hac(std::span<const Point2> points);

/// Mean silhouette of a two-way partition; members of singleton clusters
/// contribute 0.
double silhouette(std::span<const Point2> points, std::span<const int> assignment);

inline constexpr double kSilhouetteGate = 0.30;
inline constexpr double kMergeGapGate = 0.9;
inline constexpr double kMergeGapEpsilon = 1e-12;

struct ClusterOutcome {
  int k = 1;
  std::vector<int> assignment;
  /// Sorted client ids of the suspicious cluster; empty when k == 1.
  std::vector<std::size_t> suspicious;
  double s2 = 0.0;
  double delta = 0.0;
  std::vector<double> heights;
};

/// Keeps the two-cluster cut unless its silhouette is below 0.30 or the
/// final merge-gap ratio h_last / (h_prev + eps) is below 0.9. The
/// suspicious cluster is the one whose centroid is farther from the origin.
ClusterOutcome decide_k(const HacResult& hac, std::span<const Point2> points);

}  // namespace s2wef::detect

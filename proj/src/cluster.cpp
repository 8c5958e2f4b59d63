#include "s2wef/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s2wef/error.hpp"

namespace s2wef::detect {

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.z_gamma - b.z_gamma, a.z_dev - b.z_dev);
}

HacResult ward_hac(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 2) throw ConfigError("clustering needs at least two clients");

  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = distance(points[i], points[j]);
  }
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> active(n, true);

  HacResult out;
  out.assignment.assign(n, 0);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    if (step + 2 == n) {
      // Two clusters left: record the cut before the final merge.
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i] && i != 0) {
          for (std::size_t m : members[i]) out.assignment[m] = 1;
        }
      }
    }
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (active[b] && d[a][b] < best) {
          best = d[a][b];
          best_a = a;
          best_b = b;
        }
      }
    }
    const double na = static_cast<double>(members[best_a].size());
    const double nb = static_cast<double>(members[best_b].size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == best_a || k == best_b) continue;
      const double nk = static_cast<double>(members[k].size());
      const double sq = ((na + nk) * d[best_a][k] * d[best_a][k] +
                         (nb + nk) * d[best_b][k] * d[best_b][k] - nk * best * best) /
                        (na + nb + nk);
      d[best_a][k] = d[k][best_a] = std::sqrt(std::max(0.0, sq));
    }
    auto& merged = members[best_a];
    merged.insert(merged.end(), members[best_b].begin(), members[best_b].end());
    std::sort(merged.begin(), merged.end());
    members[best_b].clear();
    active[best_b] = false;
    out.merges.push_back({best_a, best_b, best, merged});
    out.heights.push_back(best);
  }
  if (n == 2) out.assignment = {0, 1};
  return out;
}

double silhouette(std::span<const Point2> points, std::span<const int> assignment) {
  const std::size_t n = points.size();
  if (assignment.size() != n) throw ShapeError("silhouette: assignment size mismatch");
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double own = 0.0;
    double other = 0.0;
    std::size_t own_n = 0;
    std::size_t other_n = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = distance(points[i], points[j]);
      if (assignment[j] == assignment[i]) {
        own += dij;
        ++own_n;
      } else {
        other += dij;
        ++other_n;
      }
    }
    if (own_n == 0 || other_n == 0) continue;
    const double a = own / static_cast<double>(own_n);
    const double b = other / static_cast<double>(other_n);
    const double scale = std::max(a, b);
    if (scale > 0.0) total += (b - a) / scale;
  }
  return total / static_cast<double>(n);
}

ClusterOutcome decide_k(const HacResult& hac, std::span<const Point2> points) {
  if (hac.assignment.size() != points.size() || hac.heights.empty()) {
    throw ShapeError("decide_k: clustering result does not match points");
  }
  ClusterOutcome out;
  out.assignment = hac.assignment;
  out.heights = hac.heights;
  out.s2 = silhouette(points, hac.assignment);
  const double h_last = hac.heights.back();
  const double h_prev = hac.heights.size() >= 2 ? hac.heights[hac.heights.size() - 2] : 0.0;
  out.delta = h_last / (h_prev + kMergeGapEpsilon);
  if (out.s2 < kSilhouetteGate || out.delta < kMergeGapGate) {
    out.k = 1;
    return out;
  }
  out.k = 2;

  double cx[2] = {0.0, 0.0};
  double cy[2] = {0.0, 0.0};
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int c = hac.assignment[i];
    cx[c] += points[i].z_gamma;
    cy[c] += points[i].z_dev;
    count[c] += 1.0;
  }
  for (int c = 0; c < 2; ++c) {
    cx[c] /= count[c];
    cy[c] /= count[c];
  }
  const double norm0 = std::hypot(cx[0], cy[0]);
  const double norm1 = std::hypot(cx[1], cy[1]);
  int pick = 1;
  if (norm0 > norm1 || (norm0 == norm1 && cx[0] > cx[1])) pick = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (hac.assignment[i] == pick) out.suspicious.push_back(i);
  }
  return out;
}

}  // namespace s2wef::detect

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "s2wef/cluster.hpp"
#include "s2wef/matrix.hpp"
#include "s2wef/wef.hpp"

namespace s2wef::detect {

inline constexpr double kGammaEpsilon = 1e-12;
inline constexpr double kStandardizeEpsilon = 1e-12;
inline constexpr double kGammaMedianFactor = 1.5;
inline constexpr double kDevMargin = 0.05;

/// Cosine similarity of two WEF matrices; 0 when either is all-zero.
double cosine(const wef::WefMatrix& a, const wef::WefMatrix& b);
double l1_distance(const wef::WefMatrix& a, const wef::WefMatrix& b);
double euclidean_distance(const wef::WefMatrix& a, const wef::WefMatrix& b);

/// Per-client statistics behind the deviation score.
struct DevComponents {
  std::vector<double> dis;  // mean Euclidean distance to the other clients
  std::vector<double> cos;  // mean cosine similarity to the other clients
  std::vector<double> avg;  // mean entry value
  std::vector<double> dev;
};

/// Deviation scores over the given matrices (current-round or accumulated,
/// the caller decides). A statistic on which every client agrees contributes
/// 0 instead of dividing by zero. Needs at least two clients.
DevComponents dev_components(std::span<const wef::WefMatrix> wefs);
std::vector<double> dev_scores(std::span<const wef::WefMatrix> wefs);

/// The WEF matrix a delta-weight attacker would produce from the last two
/// broadcasts: e where |current - previous| exceeds its mean, else 0.
wef::WefMatrix simulate_global_wef(const Matrix& current, const Matrix& previous, int e);

enum class GammaMode {
  CosOverL1,  // Cos / (L1 + eps)
  CosOnly,
};

std::vector<double> gamma_scores(std::span<const wef::WefMatrix> wefs,
                                 const wef::WefMatrix& simulated,
                                 GammaMode mode = GammaMode::CosOverL1);

/// Median; the mean of the two middle values for even counts.
double median(std::span<const double> values);

/// (x - median) / (MAD + eps).
std::vector<double> robust_standardize(std::span<const double> values);

struct ThresholdFlags {
  std::vector<bool> gamma;
  std::vector<bool> dev;
  double tau_gamma = 0.0;
  double tau_dev = 0.0;
};

/// gamma_i > 1.5 * median(gamma) and Dev_i > max(Dev) - 0.05, on raw scores.
ThresholdFlags threshold_flags(std::span<const double> gammas, std::span<const double> devs);

struct DetectionDecision {
  std::vector<bool> flags_gamma;
  std::vector<bool> flags_dev;
  double p_gamma = 0.0;
  double p_dev = 0.0;
  bool detected = false;
  std::vector<std::size_t> free_rider_list;
};

/// Labels the suspicious cluster only if at least half of it is flagged by
/// either score (p >= 1/2). K == 1 labels nobody.
DetectionDecision majority_vote(const ClusterOutcome& outcome, const ThresholdFlags& flags);

/// Deviation-threshold rule: flags clients with Dev_i > max(Dev) - epsilon.
std::vector<std::size_t> wef_defense_baseline(std::span<const wef::WefMatrix> wefs,
                                              double epsilon = kDevMargin);

/// Same rule over per-round history (history[round][client]). With
/// `accumulate` each client's matrices are summed over all rounds; otherwise
/// only the last round is used.
std::vector<std::size_t> wef_defense_baseline(
    std::span<const std::vector<wef::WefMatrix>> history, double epsilon, bool accumulate);

struct RoundScores {
  std::vector<double> gamma;
  std::vector<double> dev;
  std::vector<Point2> z;
};

struct RoundAnalysis {
  /// False at the first round, when no simulated WEF can be formed.
  bool active = false;
  RoundScores scores;
  std::optional<ClusterOutcome> cluster;
  DetectionDecision decision;
};

struct DetectOptions {
  GammaMode gamma_mode = GammaMode::CosOverL1;
  /// When false the suspicious cluster is labeled whenever K == 2.
  bool majority_vote = true;
};

/// Full per-round pipeline: simulated WEF, gamma and Dev, robust
/// standardization, Ward clustering with the K gates, score thresholds and
/// the vote. `dev_inputs` feeds the deviation score and is normally the same
/// as `wefs`; pass accumulated matrices to reproduce the accumulating
/// variant. Returns an inactive, empty analysis when `previous` is null.
RoundAnalysis detect_round(std::span<const wef::WefMatrix> wefs,
                           std::span<const wef::WefMatrix> dev_inputs, const Matrix& current,
                           const Matrix* previous, int e, const DetectOptions& options = {});

RoundAnalysis detect_round(std::span<const wef::WefMatrix> wefs, const Matrix& current,
                           const Matrix* previous, int e, const DetectOptions& options = {});

enum class DetectorKind {
  S2WEF,
  WEF_NA_BASELINE,
  CLUSTER_ONLY,
  COS_ONLY_CLUSTER,
  /// No detection; plain FedAvg over every client.
  NONE,
};

std::string_view to_string(DetectorKind kind);
std::optional<DetectorKind> parse_detector_kind(std::string_view name);

/// Runs one detector on a round. Inputs as for detect_round; `epsilon` is
/// the baseline's margin.
RoundAnalysis run_detector(DetectorKind kind, std::span<const wef::WefMatrix> wefs,
                           std::span<const wef::WefMatrix> dev_inputs, const Matrix& current,
                           const Matrix* previous, int e, double epsilon = kDevMargin);

}  // namespace s2wef::detect

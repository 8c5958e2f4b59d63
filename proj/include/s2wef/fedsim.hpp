#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2wef/config.hpp"
#include "s2wef/detect.hpp"
#include "s2wef/nn.hpp"
#include "s2wef/wef.hpp"

namespace s2wef::fedsim {

/// roles[round][client] is true when the client free-rides in that round.
using RoleTable = std::vector<std::vector<bool>>;

/// A fixed random subset free-rides from round index 2 to the end.
RoleTable schedule_scenario1(std::size_t clients, double ratio, std::size_t rounds,
                             std::uint64_t seed);
/// An independent random subset free-rides in each round from index 1.
RoleTable schedule_scenario2(std::size_t clients, double ratio, std::size_t rounds,
                             std::uint64_t seed);
RoleTable schedule(const SimConfig& cfg, std::uint64_t seed);

/// Unweighted mean of the submissions in `benign`. An empty benign set falls
/// back to the mean over every submission.
nn::ModelWeights aggregate_fedavg(std::span<const nn::ModelWeights> submissions,
                                  std::span<const std::size_t> benign);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Free-riders are the positive class. A round with nothing to find and
/// nothing flagged scores P = R = F1 = 1. FPR is 0 when there are no benign
/// clients.
Metrics compute_metrics(const std::vector<bool>& truth, std::span<const std::size_t> flagged);

struct RoundRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  detect::DetectorKind detector = detect::DetectorKind::S2WEF;
  bool accumulate = false;
  double baseline_epsilon = detect::kDevMargin;
  int local_iterations = 0;
  std::vector<bool> roles;
  std::vector<std::uint64_t> digests;
  std::vector<wef::WefMatrix> wefs;
  /// Penultimate layer of the model broadcast at this round.
  Matrix global_penultimate;
  std::vector<Matrix> submitted_penultimate;
  detect::RoundAnalysis analysis;
  Metrics metrics;
  /// Test accuracy of the model aggregated at the end of this round.
  double global_accuracy = 0.0;
};

struct RoundMetrics {
  std::size_t round = 0;
  bool active = false;
  std::size_t truth_count = 0;
  std::size_t flagged_count = 0;
  Metrics metrics;
  double global_accuracy = 0.0;
};

struct TrialReport {
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> rounds;
  /// Means over detection-active rounds.
  Metrics mean;
  /// Means over active rounds from the scenario's attack onset.
  Metrics attack_mean;
  double final_accuracy = 0.0;
  std::size_t total_flags = 0;
};

struct MetricsReport {
  SimConfig config;
  std::vector<TrialReport> trials;
  Metrics mean;
  Metrics attack_mean;
  double final_accuracy = 0.0;
  std::size_t total_flags = 0;
};

/// Raised when a trial aborts; the message names the trial, round and client.
class SimulationError : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  /// Worker cap for client-local training; 0 means hardware concurrency.
  unsigned threads = 0;
  /// When set, one JSON line per round is written here.
  std::ostream* trace = nullptr;
};

/// Reads S2WEF_THREADS; 0 when unset or invalid.
unsigned threads_from_env();

/// One trial of the round loop. Holds the per-trial data, schedule and the
/// broadcast history.
class Simulation {
 public:
  Simulation(SimConfig cfg, std::size_t trial, RunOptions options = {});

  bool done() const { return round_ >= cfg_.rounds; }
  std::size_t round() const { return round_; }
  const nn::ModelWeights& global_model() const { return global_; }
  const RoleTable& roles() const { return roles_; }
  const std::vector<nn::DatasetShard>& shards() const { return shards_; }
  const nn::DatasetShard& test_set() const { return test_; }

  RoundRecord run_round();
  TrialReport run();

 private:
  SimConfig cfg_;
  std::size_t trial_;
  std::uint64_t seed_;
  RunOptions options_;
  std::vector<nn::DatasetShard> shards_;
  nn::DatasetShard test_;
  RoleTable roles_;
  nn::ModelWeights global_;
  std::optional<nn::ModelWeights> previous_;
  std::vector<std::vector<wef::WefMatrix>> wef_history_;
  std::size_t round_ = 0;
  TrialReport report_;
};

MetricsReport run_simulation(const SimConfig& cfg, const RunOptions& options = {});

/// Summary means from per-round metrics, as stored in a TrialReport.
void summarize(TrialReport& trial, std::size_t attack_onset);
void summarize(MetricsReport& report);

}  // namespace s2wef::fedsim

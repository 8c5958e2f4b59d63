#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "s2wef/attacks.hpp"
#include "s2wef/data.hpp"
#include "s2wef/detect.hpp"
#include "s2wef/nn.hpp"

namespace s2wef::fedsim {

enum class Scenario {
  S1,     // honest for rounds 0-1, fixed free-riders from round 2
  S2,     // fresh random free-riders every round from round 1
  CLEAN,  // nobody free-rides
};

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

enum class PartitionKind { IID, DIRICHLET };

struct PartitionParams {
  PartitionKind kind = PartitionKind::IID;
  double beta = 0.5;

  friend bool operator==(const PartitionParams&, const PartitionParams&) = default;
};

inline constexpr int kConfigSchemaVersion = 1;

struct SimConfig {
  std::size_t clients = 10;
  double free_rider_ratio = 0.3;
  Scenario scenario = Scenario::S1;
  attacks::AttackParams attack;
  PartitionParams partition;
  std::size_t rounds = 20;
  nn::TrainConfig train{0.2, 0.0, 32, 5};
  std::size_t hidden_units = 128;
  detect::DetectorKind detector = detect::DetectorKind::S2WEF;
  /// Feed accumulated WEF matrices to the deviation score.
  bool accumulate = false;
  double baseline_epsilon = detect::kDevMargin;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  DatasetParams dataset;

  /// Number of free-riders per attacked round (0 for CLEAN).
  std::size_t free_rider_count() const;
  /// First round in which free-riders may appear.
  std::size_t attack_onset() const;
  std::vector<std::size_t> architecture() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// A config file that failed to parse or validate. Each diagnostic names a
/// line where one could be located.
class ConfigFileError : public ConfigError {
 public:
  explicit ConfigFileError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// Parses and validates JSON config text. Unknown keys are rejected;
/// omitted keys keep their defaults.
SimConfig parse_config(std::string_view text);
SimConfig load_config(const std::string& path);

/// Canonical JSON for a config, including every field and the schema version.
std::string dump_config(const SimConfig& cfg);

}  // namespace s2wef::fedsim

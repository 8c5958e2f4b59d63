#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "s2wef/detect.hpp"
#include "s2wef/fedsim.hpp"

namespace s2wef::fedsim {

/// One round of a trace as written: a single JSON object on one line.
std::string trace_line(const RoundRecord& record);

/// Fields of a trace line needed to replay detection.
struct TraceRound {
  std::size_t line = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  detect::DetectorKind detector = detect::DetectorKind::S2WEF;
  bool accumulate = false;
  double baseline_epsilon = detect::kDevMargin;
  int local_iterations = 0;
  bool active = false;
  std::vector<bool> roles;
  std::vector<wef::WefMatrix> wefs;
  Matrix global_penultimate;
  std::vector<Matrix> submitted_penultimate;
  std::vector<std::size_t> free_rider_list;
  std::optional<Matrix> next_global_penultimate;
};

class TraceFormatError : public Error {
 public:
  using Error::Error;
};

/// Parses a whole trace; throws TraceFormatError with the line number on any
/// malformed, truncated or inconsistent record.
std::vector<TraceRound> read_trace(std::istream& in);

/// Metrics CSV: one row per (trial, round) and a summary row per trial.
void write_metrics_csv(const MetricsReport& report, std::ostream& out);

/// Aggregated metrics parsed back from a metrics CSV (summary rows).
struct CsvSummary {
  std::size_t trials = 0;
  Metrics mean;
  Metrics attack_mean;
  double final_accuracy = 0.0;
};
CsvSummary read_metrics_csv(std::istream& in);

/// Two-decimal summary table.
std::string format_summary(const std::vector<MetricsReport>& reports);

}  // namespace s2wef::fedsim

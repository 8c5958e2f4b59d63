#include "s2wef/trace.hpp"

#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace s2wef::fedsim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

ordered_json matrix_json(const Matrix& m) {
  return ordered_json(std::vector<double>(m.values().begin(), m.values().end()));
}

std::vector<std::size_t> bool_indices(const std::vector<bool>& flags) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

std::string trace_line(const RoundRecord& r) {
  ordered_json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["round"] = r.round;
  j["detector"] = std::string(detect::to_string(r.detector));
  j["accumulate"] = r.accumulate;
  j["baseline_epsilon"] = r.baseline_epsilon;
  j["e"] = r.local_iterations;
  j["active"] = r.analysis.active;

  ordered_json roles = ordered_json::array();
  for (bool fr : r.roles) roles.push_back(fr ? "free-rider" : "benign");
  j["roles"] = roles;
  ordered_json digests = ordered_json::array();
  for (auto d : r.digests) digests.push_back(hex64(d));
  j["digests"] = digests;

  const std::size_t rows = r.wefs.empty() ? 0 : r.wefs.front().rows();
  const std::size_t cols = r.wefs.empty() ? 0 : r.wefs.front().cols();
  j["wef_shape"] = {rows, cols};
  ordered_json wefs = ordered_json::array();
  for (const auto& f : r.wefs) wefs.push_back(std::vector<int>(f.counts().begin(), f.counts().end()));
  j["wefs"] = wefs;
  j["global_penultimate"] = matrix_json(r.global_penultimate);
  ordered_json subs = ordered_json::array();
  for (const auto& m : r.submitted_penultimate) subs.push_back(matrix_json(m));
  j["submitted_penultimate"] = subs;

  const auto& s = r.analysis.scores;
  ordered_json z = ordered_json::array();
  for (const auto& p : s.z) z.push_back({p.z_gamma, p.z_dev});
  j["scores"] = {{"gamma", s.gamma}, {"dev", s.dev}, {"z", z}};

  if (r.analysis.cluster) {
    const auto& c = *r.analysis.cluster;
    j["cluster"] = {{"K", c.k},           {"assignment", c.assignment},
                    {"suspicious", c.suspicious}, {"S2", c.s2},
                    {"delta", c.delta},   {"heights", c.heights}};
  } else {
    j["cluster"] = nullptr;
  }
  const auto& d = r.analysis.decision;
  j["flags_gamma"] = bool_indices(d.flags_gamma);
  j["flags_dev"] = bool_indices(d.flags_dev);
  j["p_gamma"] = d.p_gamma;
  j["p_dev"] = d.p_dev;
  j["detected"] = d.detected;
  j["free_rider_list"] = d.free_rider_list;
  j["metrics"] = {{"precision", r.metrics.precision},
                  {"recall", r.metrics.recall},
                  {"f1", r.metrics.f1},
                  {"fpr", r.metrics.fpr}};
  j["global_accuracy"] = r.global_accuracy;
  return j.dump();
}

namespace {

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw TraceFormatError(std::string("missing field \"") + key + "\"");
  return *it;
}

Matrix parse_matrix(const json& j, std::size_t rows, std::size_t cols) {
  auto values = j.get<std::vector<double>>();
  if (values.size() != rows * cols) throw TraceFormatError("matrix does not match wef_shape");
  return Matrix(rows, cols, std::move(values));
}

TraceRound parse_round(const json& j, std::size_t line) {
  TraceRound r;
  r.line = line;
  r.trial = field(j, "trial").get<std::size_t>();
  r.seed = field(j, "seed").get<std::uint64_t>();
  r.round = field(j, "round").get<std::size_t>();
  const auto det = detect::parse_detector_kind(field(j, "detector").get<std::string>());
  if (!det) throw TraceFormatError("unknown detector");
  r.detector = *det;
  r.accumulate = field(j, "accumulate").get<bool>();
  r.baseline_epsilon = field(j, "baseline_epsilon").get<double>();
  r.local_iterations = field(j, "e").get<int>();
  if (r.local_iterations < 1) throw TraceFormatError("e must be positive");
  r.active = field(j, "active").get<bool>();
  for (const auto& role : field(j, "roles")) {
    const auto name = role.get<std::string>();
    if (name != "benign" && name != "free-rider") throw TraceFormatError("unknown role " + name);
    r.roles.push_back(name == "free-rider");
  }
  const auto shape = field(j, "wef_shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2 || shape[0] == 0 || shape[1] == 0) {
    throw TraceFormatError("wef_shape must be [rows, cols]");
  }
  const auto& wefs = field(j, "wefs");
  if (wefs.size() != r.roles.size()) throw TraceFormatError("wefs do not match roles");
  for (const auto& w : wefs) {
    auto counts = w.get<std::vector<int>>();
    if (counts.size() != shape[0] * shape[1]) throw TraceFormatError("WEF does not match wef_shape");
    try {
      r.wefs.emplace_back(shape[0], shape[1], r.local_iterations, std::move(counts));
    } catch (const Error& e) {
      throw TraceFormatError(e.what());
    }
  }
  r.global_penultimate = parse_matrix(field(j, "global_penultimate"), shape[0], shape[1]);
  const auto& subs = field(j, "submitted_penultimate");
  if (subs.size() != r.roles.size()) throw TraceFormatError("submissions do not match roles");
  for (const auto& s : subs) r.submitted_penultimate.push_back(parse_matrix(s, shape[0], shape[1]));
  r.free_rider_list = field(j, "free_rider_list").get<std::vector<std::size_t>>();
  for (std::size_t i : r.free_rider_list) {
    if (i >= r.roles.size()) throw TraceFormatError("free_rider_list entry out of range");
  }
  return r;
}

}  // namespace

std::vector<TraceRound> read_trace(std::istream& in) {
  std::vector<TraceRound> rounds;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw TraceFormatError("empty trace");
  if (text.back() != '\n') throw TraceFormatError("trace is truncated (no final newline)");
  std::istringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      TraceRound r = parse_round(j, number);
      if (!rounds.empty() && rounds.back().trial == r.trial) {
        const auto& prev = rounds.back();
        if (r.round != prev.round + 1) throw TraceFormatError("rounds are not consecutive");
        if (r.roles.size() != prev.roles.size()) throw TraceFormatError("client count changes");
        rounds.back().next_global_penultimate = r.global_penultimate;
      } else if (r.round != 0) {
        throw TraceFormatError("trial does not start at round 0");
      }
      rounds.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw TraceFormatError("line " + std::to_string(number) + ": " + e.what());
    } catch (const TraceFormatError& e) {
      throw TraceFormatError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (rounds.empty()) throw TraceFormatError("trace has no records");
  return rounds;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const MetricsReport& report, std::ostream& out) {
  out << "trial,seed,round,active,truth_count,flagged_count,precision,recall,f1,fpr,"
         "global_accuracy\n";
  for (std::size_t t = 0; t < report.trials.size(); ++t) {
    const auto& trial = report.trials[t];
    for (const auto& r : trial.rounds) {
      out << t << ',' << trial.seed << ',' << r.round << ',' << (r.active ? 1 : 0) << ','
          << r.truth_count << ',' << r.flagged_count << ',' << fmt(r.metrics.precision) << ','
          << fmt(r.metrics.recall) << ',' << fmt(r.metrics.f1) << ',' << fmt(r.metrics.fpr)
          << ',' << fmt(r.global_accuracy) << '\n';
    }
    const auto row = [&](const char* label, const Metrics& m) {
      out << t << ',' << trial.seed << ',' << label << ",,," << trial.total_flags << ','
          << fmt(m.precision) << ',' << fmt(m.recall) << ',' << fmt(m.f1) << ',' << fmt(m.fpr)
          << ',' << fmt(trial.final_accuracy) << '\n';
    };
    row("summary", trial.mean);
    row("summary_attack", trial.attack_mean);
  }
}

CsvSummary read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("trial,seed,round", 0) != 0) {
    throw TraceFormatError("metrics CSV header missing");
  }
  CsvSummary out;
  std::size_t attack_rows = 0;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 11) {
      throw TraceFormatError("metrics CSV line " + std::to_string(number) + ": expected 11 columns");
    }
    if (cols[2] != "summary" && cols[2] != "summary_attack") continue;
    Metrics m;
    try {
      m = {std::stod(cols[6]), std::stod(cols[7]), std::stod(cols[8]), std::stod(cols[9])};
    } catch (const std::exception&) {
      throw TraceFormatError("metrics CSV line " + std::to_string(number) + ": bad number");
    }
    Metrics& acc = cols[2] == "summary" ? out.mean : out.attack_mean;
    acc.precision += m.precision;
    acc.recall += m.recall;
    acc.f1 += m.f1;
    acc.fpr += m.fpr;
    if (cols[2] == "summary") {
      ++out.trials;
      out.final_accuracy += std::stod(cols[10]);
    } else {
      ++attack_rows;
    }
  }
  if (out.trials == 0) throw TraceFormatError("metrics CSV has no summary rows");
  const auto scale = [](Metrics& m, double k) {
    m.precision /= k;
    m.recall /= k;
    m.f1 /= k;
    m.fpr /= k;
  };
  scale(out.mean, static_cast<double>(out.trials));
  if (attack_rows > 0) scale(out.attack_mean, static_cast<double>(attack_rows));
  out.final_accuracy /= static_cast<double>(out.trials);
  return out;
}

std::string format_summary(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-17s %-6s %-6s %-6s %-10s %6s %5s %5s %5s %5s %6s\n",
                "Detector", "Scen.", "Attack", "Ratio", "Dist.", "Trials", "P", "R", "F1",
                "FPR", "Acc.");
  out << buf;
  for (const auto& r : reports) {
    const auto& c = r.config;
    const std::string attack =
        c.scenario == Scenario::CLEAN ? "-" : std::string(attacks::to_string(c.attack.kind));
    const std::string dist = c.partition.kind == PartitionKind::IID
                                 ? "IID"
                                 : "Dir(" + fmt(c.partition.beta).substr(0, 4) + ")";
    char ratio[16];
    std::snprintf(ratio, sizeof ratio, "%d%%",
                  c.scenario == Scenario::CLEAN ? 0 : static_cast<int>(std::lround(c.free_rider_ratio * 100)));
    std::snprintf(buf, sizeof buf, "%-17s %-6s %-6s %-6s %-10s %6zu %5.2f %5.2f %5.2f %5.2f %6.2f\n",
                  std::string(detect::to_string(c.detector)).c_str(),
                  std::string(to_string(c.scenario)).c_str(), attack.c_str(), ratio, dist.c_str(),
                  r.trials.size(), r.attack_mean.precision, r.attack_mean.recall,
                  r.attack_mean.f1, r.attack_mean.fpr, 100.0 * r.final_accuracy);
    out << buf;
  }
  return out.str();
}

}  // namespace s2wef::fedsim

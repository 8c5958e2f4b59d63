#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "s2wef/config.hpp"
#include "s2wef/detect.hpp"
#include "s2wef/error.hpp"
#include "s2wef/fedsim.hpp"
#include "s2wef/trace.hpp"
#include "s2wef/wef.hpp"

namespace s2wef::cli {

namespace fs = std::filesystem;
using fedsim::MetricsReport;
using fedsim::SimConfig;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string detector;
  bool quiet = false;
};

// Invalid input surfaces as this and maps to exit 2.
struct Invalid {
  std::vector<std::string> lines;
};

SimConfig load(const Common& c) {
  SimConfig cfg;
  try {
    cfg = fedsim::load_config(c.config);
  } catch (const fedsim::ConfigFileError& e) {
    throw Invalid{e.diagnostics()};
  } catch (const ConfigError& e) {
    throw Invalid{{e.what()}};
  }
  if (c.seed) cfg.seeds = {*c.seed};
  if (!c.detector.empty()) {
    const auto kind = detect::parse_detector_kind(c.detector);
    if (!kind) throw Invalid{{"--detector: unknown detector \"" + c.detector + "\""}};
    cfg.detector = *kind;
  }
  return cfg;
}

void prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

std::string seed_list(const SimConfig& cfg) {
  std::string s;
  for (auto v : cfg.seeds) s += (s.empty() ? "" : " ") + std::to_string(v);
  return s;
}

fedsim::RunOptions run_options(std::ostream* trace) {
  fedsim::RunOptions o;
  o.threads = fedsim::threads_from_env();
  o.trace = trace;
  return o;
}

std::string run_summary(const MetricsReport& report) {
  char buf[160];
  std::ostringstream s;
  s << "seeds: " << seed_list(report.config) << '\n';
  s << fedsim::format_summary({report});
  std::snprintf(buf, sizeof buf,
                "mean over active rounds: P %.2f R %.2f F1 %.2f FPR %.2f\n",
                report.mean.precision, report.mean.recall, report.mean.f1, report.mean.fpr);
  s << buf;
  std::snprintf(buf, sizeof buf, "flags raised: %zu, final accuracy: %.2f%%\n",
                report.total_flags, 100.0 * report.final_accuracy);
  s << buf;
  return s.str();
}

int cmd_run(const Common& c, std::ostream& out) {
  const SimConfig cfg = load(c);
  const std::string dir = c.out.empty() ? "." : c.out;
  prepare_dir(dir);
  auto trace = open_out(fs::path(dir) / "trace.ndjson");
  const MetricsReport report = fedsim::run_simulation(cfg, run_options(&trace));
  trace.close();
  {
    auto csv = open_out(fs::path(dir) / "metrics.csv");
    fedsim::write_metrics_csv(report, csv);
  }
  const std::string summary = run_summary(report);
  open_out(fs::path(dir) / "summary.txt") << summary;
  open_out(fs::path(dir) / "config.json") << fedsim::dump_config(cfg);
  if (!c.quiet) out << summary;
  return kExitOk;
}

int cmd_ablate(const Common& c, std::ostream& out) {
  SimConfig cfg = load(c);
  const std::string dir = c.out.empty() ? "." : c.out;
  prepare_dir(dir);

  const detect::DetectorKind kinds[] = {detect::DetectorKind::COS_ONLY_CLUSTER,
                                        detect::DetectorKind::CLUSTER_ONLY,
                                        detect::DetectorKind::S2WEF};
  std::vector<MetricsReport> reports;
  for (auto kind : kinds) {
    cfg.detector = kind;
    reports.push_back(fedsim::run_simulation(cfg, run_options(nullptr)));
    auto csv = open_out(fs::path(dir) / ("metrics_" + std::string(detect::to_string(kind)) + ".csv"));
    fedsim::write_metrics_csv(reports.back(), csv);
  }

  std::ostringstream s;
  char buf[200];
  s << "seeds (identical across variants): " << seed_list(cfg) << '\n';
  for (const auto& r : reports) {
    s << "  " << detect::to_string(r.config.detector) << " seeds: " << seed_list(r.config) << '\n';
  }
  s << "\nL1 ablation (cluster-only)\n";
  std::snprintf(buf, sizeof buf, "%-10s %5s %5s %5s\n", "gamma", "P", "R", "F1");
  s << buf;
  const auto prf = [&](const char* name, const MetricsReport& r) {
    std::snprintf(buf, sizeof buf, "%-10s %5.2f %5.2f %5.2f\n", name, r.attack_mean.precision,
                  r.attack_mean.recall, r.attack_mean.f1);
    s << buf;
  };
  prf("Cos", reports[0]);
  prf("Cos/L1", reports[1]);
  s << "\nVote ablation\n";
  std::snprintf(buf, sizeof buf, "%-16s %-16s\n", "FPR clustering", "FPR full");
  s << buf;
  std::snprintf(buf, sizeof buf, "%-16.2f %-16.2f\n", reports[1].mean.fpr, reports[2].mean.fpr);
  s << buf;

  open_out(fs::path(dir) / "ablation.txt") << s.str();
  {
    auto csv = open_out(fs::path(dir) / "ablation.csv");
    csv << "detector,seeds,precision,recall,f1,fpr,attack_precision,attack_recall,attack_f1,"
           "attack_fpr,final_accuracy\n";
    for (const auto& r : reports) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                    std::string(detect::to_string(r.config.detector)).c_str(),
                    seed_list(r.config).c_str(), r.mean.precision, r.mean.recall, r.mean.f1,
                    r.mean.fpr, r.attack_mean.precision, r.attack_mean.recall, r.attack_mean.f1,
                    r.attack_mean.fpr, r.final_accuracy);
      csv << buf;
    }
  }
  if (!c.quiet) out << s.str();
  return kExitOk;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

int cmd_detect_trace(const std::string& path, const Common& c, std::ostream& out) {
  std::optional<detect::DetectorKind> forced;
  if (!c.detector.empty()) {
    forced = detect::parse_detector_kind(c.detector);
    if (!forced) throw Invalid{{"--detector: unknown detector \"" + c.detector + "\""}};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Invalid{{path + ": cannot open trace"}};
  std::vector<fedsim::TraceRound> rounds;
  try {
    rounds = fedsim::read_trace(in);
  } catch (const fedsim::TraceFormatError& e) {
    throw Invalid{{path + ": " + e.what()}};
  }

  std::vector<std::string> diverged;
  std::vector<std::vector<wef::WefMatrix>> history;
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    const auto& r = rounds[k];
    if (r.round == 0) history.clear();
    const auto kind = forced.value_or(r.detector);
    const Matrix* previous = r.round == 0 ? nullptr : &rounds[k - 1].global_penultimate;

    std::vector<wef::WefMatrix> dev_inputs;
    if (r.accumulate) {
      history.push_back(r.wefs);
      for (std::size_t i = 0; i < r.wefs.size(); ++i) {
        std::vector<wef::WefMatrix> mine;
        for (const auto& past : history) mine.push_back(past[i]);
        dev_inputs.push_back(wef::accumulate(mine));
      }
    }
    detect::RoundAnalysis a;
    try {
      a = detect::run_detector(kind, r.wefs,
                               r.accumulate ? std::span<const wef::WefMatrix>(dev_inputs)
                                            : std::span<const wef::WefMatrix>(r.wefs),
                               r.global_penultimate, previous, r.local_iterations,
                               r.baseline_epsilon);
    } catch (const Error& e) {
      throw Invalid{{path + ": line " + std::to_string(r.line) + ": " + e.what()}};
    }
    const bool same = a.decision.free_rider_list == r.free_rider_list;
    if (!same) {
      diverged.push_back("trial " + std::to_string(r.trial) + " round " +
                         std::to_string(r.round) + ": recorded " + join(r.free_rider_list) +
                         " replayed " + join(a.decision.free_rider_list));
    }
    if (!c.quiet) {
      out << "trial " << r.trial << " round " << r.round << " " << detect::to_string(kind)
          << (a.active ? "" : " (inactive)") << ": " << join(a.decision.free_rider_list)
          << (same ? "" : "  DIVERGES") << '\n';
    }
  }
  if (diverged.empty()) {
    out << "replayed " << rounds.size() << " rounds: no divergence\n";
    return kExitOk;
  }
  out << "divergence in " << diverged.size() << " of " << rounds.size() << " rounds:\n";
  for (const auto& d : diverged) out << "  " << d << '\n';
  return kExitFailure;
}

int cmd_report(std::vector<std::string> paths, const Common& c, std::ostream& out) {
  if (paths.empty()) paths.push_back(c.out.empty() ? "." : c.out);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-32s %6s %5s %5s %5s %5s %6s\n", "run", "Trials", "P", "R",
                "F1", "FPR", "Acc.");
  out << buf;
  for (const auto& p : paths) {
    fs::path csv = p;
    if (fs::is_directory(csv)) csv /= "metrics.csv";
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw Invalid{{csv.string() + ": cannot open metrics CSV"}};
    fedsim::CsvSummary s;
    try {
      s = fedsim::read_metrics_csv(in);
    } catch (const fedsim::TraceFormatError& e) {
      throw Invalid{{csv.string() + ": " + e.what()}};
    }
    std::snprintf(buf, sizeof buf, "%-32s %6zu %5.2f %5.2f %5.2f %5.2f %6.2f\n", p.c_str(),
                  s.trials, s.attack_mean.precision, s.attack_mean.recall, s.attack_mean.f1,
                  s.attack_mean.fpr, 100.0 * s.final_accuracy);
    out << buf;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Free-rider detection simulator", "s2wef"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed = 0;
  std::string trace_path;
  std::vector<std::string> report_paths;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", common.config, "Experiment config (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", seed, "Run a single trial with this seed");
    sub->add_option("--detector", common.detector,
                    "S2WEF, WEF_NA_BASELINE, CLUSTER_ONLY, COS_ONLY_CLUSTER or NONE");
    sub->add_flag("--quiet", common.quiet, "Suppress stdout output");
  };
  auto* run = app.add_subcommand("run", "Run the configured simulation");
  add_common(run, true);
  auto* ablate = app.add_subcommand("ablate", "Run the L1 and majority-vote ablations");
  add_common(ablate, true);
  auto* replay = app.add_subcommand("detect-trace", "Re-run detection over a recorded trace");
  add_common(replay, false);
  replay->add_option("trace", trace_path, "Trace file (ndjson)")->required();
  auto* report = app.add_subcommand("report", "Summarize metrics CSVs");
  add_common(report, false);
  report->add_option("paths", report_paths, "Run directories or metrics CSV files");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  for (auto* sub : {run, ablate, replay, report}) {
    if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed;
  }

  try {
    if (ablate->parsed() && !common.detector.empty()) {
      throw Invalid{{"--detector: ablate always compares its fixed detector set"}};
    }
    if (run->parsed()) return cmd_run(common, out);
    if (ablate->parsed()) return cmd_ablate(common, out);
    if (replay->parsed()) return cmd_detect_trace(trace_path, common, out);
    return cmd_report(report_paths, common, out);
  } catch (const Invalid& e) {
    for (const auto& line : e.lines) err << "error: " << line << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace s2wef::cli

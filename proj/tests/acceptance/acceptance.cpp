// Acceptance harness: one PASS/FAIL line per criterion, exit 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "s2wef/attacks.hpp"
#include "s2wef/cluster.hpp"
#include "s2wef/config.hpp"
#include "s2wef/detect.hpp"
#include "s2wef/fedsim.hpp"
#include "s2wef/wef.hpp"
#include "support.hpp"

using namespace s2wef;
using attacks::AttackKind;
using detect::DetectorKind;
using fedsim::Scenario;
using fedsim::SimConfig;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& text) {
  if (!pass) ++failures;
  std::printf("criterion %2d  %s  %s\n", id, pass ? "PASS" : "FAIL", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Indented sub-result under a multi-cell criterion; not counted on its own.
bool detail(bool ok, const std::string& text) {
  std::printf("              %s %s\n", ok ? "ok  " : "miss", text.c_str());
  return ok;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

SimConfig base(AttackKind attack, Scenario scenario, double ratio, DetectorKind det) {
  SimConfig c;
  c.clients = 10;
  c.train.local_iterations = 5;
  c.rounds = 20;
  c.seeds = {1, 2, 3};
  c.attack.kind = attack;
  c.scenario = scenario;
  c.free_rider_ratio = scenario == Scenario::CLEAN ? 0.0 : ratio;
  c.detector = det;
  return c;
}

// Runs are shared between criteria.
std::map<std::tuple<int, int, double, int, std::size_t, std::size_t>, fedsim::MetricsReport> cache;

const fedsim::MetricsReport& run(const SimConfig& c) {
  const auto key = std::make_tuple(static_cast<int>(c.attack.kind), static_cast<int>(c.scenario),
                                   c.free_rider_ratio, static_cast<int>(c.detector), c.rounds,
                                   c.seeds.size());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, fedsim::run_simulation(c)).first;
  return it->second;
}

const char* name(AttackKind k) { return attacks::to_string(k).data(); }
const char* name(Scenario s) { return fedsim::to_string(s).data(); }

void clustering_oracle() {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> size(3, 8);
  std::normal_distribution<double> d(0.0, 2.0);
  const auto start = std::chrono::steady_clock::now();
  int mismatched = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<detect::Point2> pts(size(gen));
    for (auto& p : pts) p = {d(gen), d(gen)};
    const auto hac = detect::ward_hac(pts);
    const auto expect = oracle::naive_ward(pts);
    bool same = hac.merges.size() == expect.size();
    for (std::size_t k = 0; same && k < expect.size(); ++k) {
      same = hac.merges[k].members == expect[k].members;
      worst = std::max(worst, std::abs(hac.heights[k] - expect[k].height));
    }
    if (!same) ++mismatched;
  }
  const double secs = seconds_since(start);
  verdict(1, mismatched == 0 && worst <= 1e-9 && secs < 5.0,
          fmt("ward_hac vs naive oracle on 200 sets: %d partition mismatches, max height error %.2e, %.3f s",
              mismatched, worst, secs));
}

void wef_oracle() {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> steps(0, 5);
  int mismatched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = dim(gen), w = dim(gen);
    std::vector<Matrix> snaps{testing::random_matrix(gen, h, w)};
    for (int t = steps(gen); t > 0; --t) {
      Matrix next = snaps.back();
      const Matrix step = testing::random_matrix(gen, h, w, 0.1);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += step[i];
      snaps.push_back(next);
    }
    const auto f = wef::build_wef(snaps);
    if (std::vector<int>(f.counts().begin(), f.counts().end()) != oracle::naive_wef(snaps)) ++mismatched;
  }
  verdict(2, mismatched == 0, fmt("build_wef vs naive recomputation on 100 sequences: %d mismatches", mismatched));
}

void dwa_equality() {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> dim(1, 6), iters(1, 8);
  int mismatched = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<std::size_t> arch{3, static_cast<std::size_t>(dim(gen)), static_cast<std::size_t>(dim(gen) + 1)};
    const auto g = testing::random_model(gen, arch);
    const auto p = testing::random_model(gen, arch);
    const int e = iters(gen);
    const auto fake = attacks::dwa(g, p, e, true);
    if (detect::simulate_global_wef(g.penultimate(), p.penultimate(), e) != fake.wef) ++mismatched;
  }
  verdict(3, mismatched == 0, fmt("simulated global WEF vs DWA counterfeit on 50 pairs: %d mismatches", mismatched));
}

void attack_trend(int id, AttackKind attack) {
  const auto start = std::chrono::steady_clock::now();
  const double full = run(base(attack, Scenario::S1, 0.3, DetectorKind::S2WEF)).attack_mean.f1;
  const double baseline = run(base(attack, Scenario::S1, 0.3, DetectorKind::WEF_NA_BASELINE)).attack_mean.f1;
  const double secs = seconds_since(start);
  verdict(id, full >= 0.90 && baseline <= 0.60 && (id != 4 || secs < 60.0),
          fmt("%s S1 30%%: S2WEF F1 %.3f (>= 0.90), baseline F1 %.3f (<= 0.60), %.1f s", name(attack), full,
              baseline, secs));
}

void coverage() {
  int cells = 0, good = 0;
  for (AttackKind a : {AttackKind::RWA, AttackKind::SPA, AttackKind::ADWA}) {
    for (Scenario s : {Scenario::S1, Scenario::S2}) {
      for (double ratio : {0.1, 0.3}) {
        const double f1 = run(base(a, s, ratio, DetectorKind::S2WEF)).attack_mean.f1;
        ++cells;
        good += detail(f1 >= 0.90, fmt("%s %s %02.0f%%: S2WEF F1 %.3f (>= 0.90)", name(a), name(s), ratio * 100, f1));
      }
    }
  }
  verdict(6, good == cells, fmt("RWA/SPA/ADWA x S1/S2 x 10%%/30%%: %d of %d cells reach F1 >= 0.90", good, cells));
}

void scenario_robustness() {
  int cells = 0, good = 0;
  for (AttackKind a : {AttackKind::RWA, AttackKind::SPA, AttackKind::DWA, AttackKind::ADWA, AttackKind::AWCA}) {
    for (double ratio : {0.1, 0.3}) {
      const double s1 = run(base(a, Scenario::S1, ratio, DetectorKind::S2WEF)).attack_mean.f1;
      const double s2 = run(base(a, Scenario::S2, ratio, DetectorKind::S2WEF)).attack_mean.f1;
      ++cells;
      good += detail(std::abs(s1 - s2) <= 0.10,
              fmt("%s %02.0f%%: F1 S1 %.3f, S2 %.3f, gap %.3f (<= 0.10)", name(a), ratio * 100, s1, s2,
                  std::abs(s1 - s2)));
    }
  }
  verdict(7, good == cells, fmt("|F1(S1) - F1(S2)| <= 0.10: %d of %d attack/ratio pairs", good, cells));
}

void vote_ablation() {
  auto clean = [](DetectorKind d) {
    auto c = base(AttackKind::DWA, Scenario::CLEAN, 0.0, d);
    c.rounds = 30;
    c.seeds = {1, 2, 3, 4, 5};
    return run(c).mean.fpr;
  };
  const double full = clean(DetectorKind::S2WEF);
  const double cluster = clean(DetectorKind::CLUSTER_ONLY);
  verdict(8, full <= 0.6 * cluster + 0.02,
          fmt("CLEAN E=30, 5 seeds: FPR full %.3f <= 0.6 * %.3f + 0.02 = %.3f", full, cluster, 0.6 * cluster + 0.02));
}

void l1_ablation() {
  int good = 0;
  for (Scenario s : {Scenario::S1, Scenario::S2}) {
    const double ratio_l1 = run(base(AttackKind::DWA, s, 0.3, DetectorKind::CLUSTER_ONLY)).attack_mean.f1;
    const double cos_only = run(base(AttackKind::DWA, s, 0.3, DetectorKind::COS_ONLY_CLUSTER)).attack_mean.f1;
    good += detail(ratio_l1 >= cos_only,
            fmt("DWA %s 30%% cluster-only: F1 Cos/L1 %.3f >= Cos %.3f", name(s), ratio_l1, cos_only));
  }
  verdict(9, good == 2, fmt("DWA cluster-only, Cos/L1 at least as good as Cos: %d of 2 scenarios", good));
}

void accuracy() {
  const double clean_full = run(base(AttackKind::DWA, Scenario::CLEAN, 0.0, DetectorKind::S2WEF)).final_accuracy;
  const double clean_none = run(base(AttackKind::DWA, Scenario::CLEAN, 0.0, DetectorKind::NONE)).final_accuracy;
  const bool clean_ok = detail(std::abs(clean_full - clean_none) <= 0.01,
          fmt("CLEAN final accuracy: S2WEF %.4f, FedAvg %.4f, gap %.4f (<= 0.01)", clean_full, clean_none,
              std::abs(clean_full - clean_none)));
  const double awca_full = run(base(AttackKind::AWCA, Scenario::S1, 0.3, DetectorKind::S2WEF)).final_accuracy;
  const double awca_none = run(base(AttackKind::AWCA, Scenario::S1, 0.3, DetectorKind::NONE)).final_accuracy;
  const bool awca_ok = detail(std::abs(awca_full - awca_none) <= 0.02,
          fmt("AWCA 30%% final accuracy: S2WEF %.4f, FedAvg %.4f, gap %.4f (<= 0.02)", awca_full, awca_none,
              std::abs(awca_full - awca_none)));
  verdict(10, clean_ok && awca_ok, "final accuracy with S2WEF vs plain FedAvg on identical seeds");
}

void determinism() {
  auto trace_with = [](const SimConfig& c, const char* threads) {
    if (threads) setenv("S2WEF_THREADS", threads, 1);
    else unsetenv("S2WEF_THREADS");
    std::ostringstream trace;
    fedsim::RunOptions opts;
    opts.threads = fedsim::threads_from_env();
    opts.trace = &trace;
    fedsim::run_simulation(c, opts);
    return trace.str();
  };
  const std::vector<SimConfig> configs{base(AttackKind::DWA, Scenario::S1, 0.3, DetectorKind::S2WEF),
                                       base(AttackKind::SPA, Scenario::S2, 0.1, DetectorKind::S2WEF)};
  int good = 0;
  for (const auto& c : configs) {
    const std::string ref = trace_with(c, "1");
    bool same = !ref.empty();
    for (const char* t : {"1", "2", "4", static_cast<const char*>(nullptr)}) same = same && trace_with(c, t) == ref;
    good += detail(same,
            fmt("%s %s trace (%zu bytes) identical across S2WEF_THREADS = 1, 2, 4, unset", name(c.attack.kind),
                name(c.scenario), ref.size()));
  }
  unsetenv("S2WEF_THREADS");
  verdict(11, good == 2, fmt("byte-identical traces for %d of 2 configs", good));
}

void invariant_suite() {
  int cases = 0, passed = 0;
  std::vector<std::string> broken;
  for (const char* bin : {"test_nn", "test_wef", "test_attacks", "test_cluster", "test_detect", "test_fedsim",
                          "test_config", "test_cli"}) {
    const std::string cmd = std::string(S2WEF_UNIT_BIN_DIR) + "/" + bin + " -ts=invariants -nv 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string output;
    if (pipe) {
      char buf[4096];
      while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    }
    const int status = pipe ? pclose(pipe) : -1;
    std::smatch m;
    const std::regex summary(R"(test cases:\s*(\d+)\s*\|\s*(\d+) passed)");
    if (std::regex_search(output, m, summary)) {
      cases += std::stoi(m[1]);
      passed += std::stoi(m[2]);
    }
    if (status != 0 || !std::regex_search(output, m, summary) || m[1] == "0") broken.push_back(bin);
  }
  std::string text = fmt("property tests: %d of %d passed", passed, cases);
  for (const auto& b : broken) text += ", failing: " + b;
  verdict(12, broken.empty() && cases > 0 && passed == cases, text);
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::pair<int, std::function<void()>>> steps{
      {1, clustering_oracle}, {2, wef_oracle}, {3, dwa_equality},
      {4, [] { attack_trend(4, AttackKind::DWA); }}, {5, [] { attack_trend(5, AttackKind::AWCA); }},
      {6, coverage}, {7, scenario_robustness}, {8, vote_ablation}, {9, l1_ablation},
      {10, accuracy}, {11, determinism}, {12, invariant_suite}};
  for (const auto& [id, step] : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("aborted: ") + e.what());
    }
  }
  std::printf("%d failing checks, %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}

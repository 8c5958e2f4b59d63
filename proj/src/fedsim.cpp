#include "s2wef/fedsim.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <string>
#include <thread>

#include "s2wef/attacks.hpp"
#include "s2wef/data.hpp"
#include "s2wef/rng.hpp"
#include "s2wef/trace.hpp"

namespace s2wef::fedsim {

namespace {

// Stream tags for derive_seed.
enum SeedTag : std::uint64_t {
  kTagData = 1,
  kTagPartition = 2,
  kTagSchedule = 3,
  kTagInit = 4,
  kTagTrain = 5,
  kTagAttack = 6,
};

std::size_t count_for(std::size_t clients, double ratio) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(clients)));
}

std::vector<bool> random_subset(std::size_t clients, std::size_t count, Rng& rng) {
  std::vector<std::size_t> ids(clients);
  for (std::size_t i = 0; i < clients; ++i) ids[i] = i;
  rng.shuffle(ids);
  std::vector<bool> chosen(clients, false);
  for (std::size_t k = 0; k < count && k < clients; ++k) chosen[ids[k]] = true;
  return chosen;
}

}  // namespace

RoleTable schedule_scenario1(std::size_t clients, double ratio, std::size_t rounds,
                             std::uint64_t seed) {
  Rng rng(seed);
  const auto chosen = random_subset(clients, count_for(clients, ratio), rng);
  RoleTable table(rounds, std::vector<bool>(clients, false));
  for (std::size_t t = 2; t < rounds; ++t) table[t] = chosen;
  return table;
}

RoleTable schedule_scenario2(std::size_t clients, double ratio, std::size_t rounds,
                             std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t count = count_for(clients, ratio);
  RoleTable table(rounds, std::vector<bool>(clients, false));
  for (std::size_t t = 1; t < rounds; ++t) table[t] = random_subset(clients, count, rng);
  return table;
}

RoleTable schedule(const SimConfig& cfg, std::uint64_t seed) {
  switch (cfg.scenario) {
    case Scenario::S1:
      return schedule_scenario1(cfg.clients, cfg.free_rider_ratio, cfg.rounds, seed);
    case Scenario::S2:
      return schedule_scenario2(cfg.clients, cfg.free_rider_ratio, cfg.rounds, seed);
    case Scenario::CLEAN:
      break;
  }
  return RoleTable(cfg.rounds, std::vector<bool>(cfg.clients, false));
}

nn::ModelWeights aggregate_fedavg(std::span<const nn::ModelWeights> submissions,
                                  std::span<const std::size_t> benign) {
  if (submissions.empty()) throw ConfigError("aggregation needs at least one submission");
  std::vector<std::size_t> members(benign.begin(), benign.end());
  if (members.empty()) {
    members.resize(submissions.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  }
  for (std::size_t i : members) {
    if (i >= submissions.size()) throw ShapeError("aggregation: client id out of range");
    if (!submissions[i].same_shape(submissions.front())) {
      throw ShapeError("aggregation: submission " + std::to_string(i) + " has a different shape");
    }
  }
  nn::ModelWeights sum = nn::map_params(submissions[members.front()], [](double) { return 0.0; });
  for (std::size_t i : members) {
    sum = nn::zip_with(sum, submissions[i], [](double a, double b) { return a + b; });
  }
  const double scale = 1.0 / static_cast<double>(members.size());
  return nn::map_params(sum, [scale](double v) { return v * scale; });
}

Metrics compute_metrics(const std::vector<bool>& truth, std::span<const std::size_t> flagged) {
  std::vector<bool> pred(truth.size(), false);
  for (std::size_t i : flagged) {
    if (i >= truth.size()) throw ShapeError("metrics: flagged client id out of range");
    pred[i] = true;
  }
  double tp = 0, fp = 0, fn = 0, negatives = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && pred[i]) ++tp;
    if (!truth[i] && pred[i]) ++fp;
    if (truth[i] && !pred[i]) ++fn;
    if (!truth[i]) ++negatives;
  }
  Metrics m;
  m.fpr = negatives > 0 ? fp / negatives : 0.0;
  if (tp == 0 && fp == 0 && fn == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    return m;
  }
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

unsigned threads_from_env() {
  const char* raw = std::getenv("S2WEF_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1) return 0;
  return static_cast<unsigned>(v);
}

Simulation::Simulation(SimConfig cfg, std::size_t trial, RunOptions options)
    : cfg_(std::move(cfg)), trial_(trial), options_(options) {
  cfg_.validate();
  if (trial_ >= cfg_.seeds.size()) throw ConfigError("trial index beyond the seed list");
  seed_ = cfg_.seeds[trial_];

  auto blobs = make_blobs(cfg_.dataset, derive_seed(seed_, {kTagData}));
  test_ = std::move(blobs.test);
  const auto partition_seed = derive_seed(seed_, {kTagPartition});
  shards_ = cfg_.partition.kind == PartitionKind::IID
                ? partition_iid(blobs.train, cfg_.clients, partition_seed)
                : partition_dirichlet(blobs.train, cfg_.clients, cfg_.partition.beta,
                                      partition_seed);
  roles_ = schedule(cfg_, derive_seed(seed_, {kTagSchedule}));
  const auto arch = cfg_.architecture();
  global_ = nn::init_model(arch, derive_seed(seed_, {kTagInit}));
  report_.seed = seed_;
}

RoundRecord Simulation::run_round() {
  if (done()) throw ConfigError("simulation already finished");
  const std::size_t t = round_;
  const std::size_t n = cfg_.clients;
  const int e = static_cast<int>(cfg_.train.local_iterations);
  const auto& roles = roles_[t];

  std::vector<nn::ModelWeights> submissions(n);
  std::vector<wef::WefMatrix> wefs(n);
  std::vector<std::exception_ptr> errors(n);
  const attacks::GlobalHistory history{&global_, previous_ ? &*previous_ : nullptr};

  auto work = [&](std::size_t i) {
    try {
      if (roles[i]) {
        auto fake = attacks::generate(cfg_.attack, history, e,
                                      derive_seed(seed_, {kTagAttack, t, i}));
        submissions[i] = std::move(fake.weights);
        wefs[i] = std::move(fake.wef);
      } else {
        auto trained = nn::local_train(global_, shards_[i], cfg_.train,
                                       derive_seed(seed_, {kTagTrain, t, i}));
        wefs[i] = wef::build_wef(trained.snapshots);
        submissions[i] = std::move(trained.weights);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  unsigned workers = options_.threads != 0 ? options_.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  const std::string where = "trial " + std::to_string(trial_) + " (seed " +
                            std::to_string(seed_) + "), round " + std::to_string(t);
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& ex) {
      throw SimulationError(where + ", client " + std::to_string(i) + ": " + ex.what());
    }
  }

  std::vector<wef::WefMatrix> dev_inputs;
  if (cfg_.accumulate) {
    wef_history_.push_back(wefs);
    dev_inputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<wef::WefMatrix> mine;
      mine.reserve(wef_history_.size());
      for (const auto& past : wef_history_) mine.push_back(past[i]);
      dev_inputs.push_back(wef::accumulate(mine));
    }
  }

  RoundRecord rec;
  rec.trial = trial_;
  rec.seed = seed_;
  rec.round = t;
  rec.detector = cfg_.detector;
  rec.accumulate = cfg_.accumulate;
  rec.baseline_epsilon = cfg_.baseline_epsilon;
  rec.local_iterations = e;
  rec.roles = roles;
  rec.global_penultimate = global_.penultimate();
  for (const auto& s : submissions) {
    rec.digests.push_back(s.digest());
    rec.submitted_penultimate.push_back(s.penultimate());
  }
  try {
    rec.analysis = detect::run_detector(
        cfg_.detector, wefs, cfg_.accumulate ? std::span<const wef::WefMatrix>(dev_inputs) : wefs,
        global_.penultimate(), previous_ ? &previous_->penultimate() : nullptr, e,
        cfg_.baseline_epsilon);
  } catch (const std::exception& ex) {
    throw SimulationError(where + ", detection: " + ex.what());
  }
  rec.wefs = std::move(wefs);

  const auto& flagged = rec.analysis.decision.free_rider_list;
  std::vector<std::size_t> benign;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(flagged.begin(), flagged.end(), i) == flagged.end()) benign.push_back(i);
  }
  nn::ModelWeights next = aggregate_fedavg(submissions, benign);
  rec.metrics = compute_metrics(roles, flagged);
  rec.global_accuracy = nn::evaluate_accuracy(next, test_);

  RoundMetrics rm;
  rm.round = t;
  rm.active = rec.analysis.active;
  rm.truth_count = static_cast<std::size_t>(std::count(roles.begin(), roles.end(), true));
  rm.flagged_count = flagged.size();
  rm.metrics = rec.metrics;
  rm.global_accuracy = rec.global_accuracy;
  report_.rounds.push_back(rm);

  if (options_.trace != nullptr) *options_.trace << trace_line(rec) << '\n';

  previous_ = std::move(global_);
  global_ = std::move(next);
  ++round_;
  return rec;
}

TrialReport Simulation::run() {
  while (!done()) run_round();
  report_.final_accuracy = nn::evaluate_accuracy(global_, test_);
  summarize(report_, cfg_.attack_onset());
  return report_;
}

void summarize(TrialReport& trial, std::size_t attack_onset) {
  Metrics sum, attack_sum;
  std::size_t count = 0, attack_count = 0;
  trial.total_flags = 0;
  const auto add = [](Metrics& acc, const Metrics& m) {
    acc.precision += m.precision;
    acc.recall += m.recall;
    acc.f1 += m.f1;
    acc.fpr += m.fpr;
  };
  const auto scale = [](Metrics m, std::size_t k) {
    if (k == 0) return Metrics{};
    const double s = 1.0 / static_cast<double>(k);
    return Metrics{m.precision * s, m.recall * s, m.f1 * s, m.fpr * s};
  };
  for (const auto& r : trial.rounds) {
    trial.total_flags += r.flagged_count;
    if (!r.active) continue;
    add(sum, r.metrics);
    ++count;
    if (r.round >= attack_onset) {
      add(attack_sum, r.metrics);
      ++attack_count;
    }
  }
  trial.mean = scale(sum, count);
  trial.attack_mean = scale(attack_sum, attack_count);
}

void summarize(MetricsReport& report) {
  Metrics sum, attack_sum;
  double acc = 0.0;
  report.total_flags = 0;
  for (const auto& t : report.trials) {
    sum.precision += t.mean.precision;
    sum.recall += t.mean.recall;
    sum.f1 += t.mean.f1;
    sum.fpr += t.mean.fpr;
    attack_sum.precision += t.attack_mean.precision;
    attack_sum.recall += t.attack_mean.recall;
    attack_sum.f1 += t.attack_mean.f1;
    attack_sum.fpr += t.attack_mean.fpr;
    acc += t.final_accuracy;
    report.total_flags += t.total_flags;
  }
  const double k = report.trials.empty() ? 1.0 : static_cast<double>(report.trials.size());
  report.mean = {sum.precision / k, sum.recall / k, sum.f1 / k, sum.fpr / k};
  report.attack_mean = {attack_sum.precision / k, attack_sum.recall / k, attack_sum.f1 / k,
                        attack_sum.fpr / k};
  report.final_accuracy = acc / k;
}

MetricsReport run_simulation(const SimConfig& cfg, const RunOptions& options) {
  cfg.validate();
  MetricsReport report;
  report.config = cfg;
  for (std::size_t trial = 0; trial < cfg.seeds.size(); ++trial) {
    Simulation sim(cfg, trial, options);
    report.trials.push_back(sim.run());
  }
  summarize(report);
  return report;
}

}  // namespace s2wef::fedsim

#include "s2wef/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <utility>

namespace s2wef::detect {

namespace {

void require_same_shapes(std::span<const wef::WefMatrix> wefs, const char* what) {
  for (const auto& f : wefs) {
    if (!f.same_shape(wefs.front())) throw ShapeError(std::string(what) + ": WEF shapes differ");
  }
}

// Normalized absolute deviation from the mean, or all zeros when every
// client has the same value.
std::vector<double> normalized_deviation(const std::vector<double>& x) {
  std::vector<double> out(x.size(), 0.0);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) return out;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double denom = 0.0;
  for (double v : x) denom += std::abs(v - mean);
  if (denom == 0.0) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i] - mean) / denom;
  return out;
}

}  // namespace

double cosine(const wef::WefMatrix& a, const wef::WefMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("cosine: WEF shapes differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double l1_distance(const wef::WefMatrix& a, const wef::WefMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("l1_distance: WEF shapes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

double euclidean_distance(const wef::WefMatrix& a, const wef::WefMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("euclidean_distance: WEF shapes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

DevComponents dev_components(std::span<const wef::WefMatrix> wefs) {
  const std::size_t n = wefs.size();
  if (n < 2) throw ConfigError("deviation score needs at least two clients");
  require_same_shapes(wefs, "dev_scores");
  DevComponents out;
  out.dis.assign(n, 0.0);
  out.cos.assign(n, 0.0);
  out.avg.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      out.dis[i] += euclidean_distance(wefs[i], wefs[j]);
      out.cos[i] += cosine(wefs[i], wefs[j]);
    }
    out.dis[i] /= static_cast<double>(n - 1);
    out.cos[i] /= static_cast<double>(n - 1);
    const auto counts = wefs[i].counts();
    out.avg[i] = std::accumulate(counts.begin(), counts.end(), 0.0) /
                 static_cast<double>(std::max<std::size_t>(counts.size(), 1));
  }
  const auto dis = normalized_deviation(out.dis);
  const auto cos = normalized_deviation(out.cos);
  const auto avg = normalized_deviation(out.avg);
  out.dev.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.dev[i] = dis[i] + cos[i] + avg[i];
  return out;
}

std::vector<double> dev_scores(std::span<const wef::WefMatrix> wefs) {
  return dev_components(wefs).dev;
}

wef::WefMatrix simulate_global_wef(const Matrix& current, const Matrix& previous, int e) {
  require_same_shape(current, previous, "simulate_global_wef");
  if (e < 1) throw ConfigError("simulate_global_wef needs e >= 1");
  const double alpha = wef::dynamic_threshold(previous, current);
  wef::WefMatrix f(current.rows(), current.cols(), e);
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (std::abs(current[i] - previous[i]) > alpha) f.set(i, e);
  }
  return f;
}

std::vector<double> gamma_scores(std::span<const wef::WefMatrix> wefs,
                                 const wef::WefMatrix& simulated, GammaMode mode) {
  std::vector<double> out;
  out.reserve(wefs.size());
  for (const auto& f : wefs) {
    const double cos = cosine(f, simulated);
    if (mode == GammaMode::CosOnly) {
      out.push_back(cos);
    } else {
      out.push_back(cos / (l1_distance(f, simulated) + kGammaEpsilon));
    }
  }
  return out;
}

double median(std::span<const double> values) {
  if (values.empty()) throw ConfigError("median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<double> robust_standardize(std::span<const double> values) {
  const double med = median(values);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - med);
  const double mad = median(dev);
  std::vector<double> z(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    z[i] = (values[i] - med) / (mad + kStandardizeEpsilon);
  }
  return z;
}

ThresholdFlags threshold_flags(std::span<const double> gammas, std::span<const double> devs) {
  if (gammas.empty() || gammas.size() != devs.size()) {
    throw ShapeError("threshold_flags: score vectors must be nonempty and equal length");
  }
  ThresholdFlags out;
  out.tau_gamma = kGammaMedianFactor * median(gammas);
  out.tau_dev = *std::max_element(devs.begin(), devs.end()) - kDevMargin;
  out.gamma.resize(gammas.size());
  out.dev.resize(devs.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    out.gamma[i] = gammas[i] > out.tau_gamma;
    out.dev[i] = devs[i] > out.tau_dev;
  }
  return out;
}

DetectionDecision majority_vote(const ClusterOutcome& outcome, const ThresholdFlags& flags) {
  DetectionDecision out;
  out.flags_gamma = flags.gamma;
  out.flags_dev = flags.dev;
  if (outcome.k != 2 || outcome.suspicious.empty()) return out;
  double hits_gamma = 0.0;
  double hits_dev = 0.0;
  for (std::size_t i : outcome.suspicious) {
    if (i >= flags.gamma.size()) throw ShapeError("majority_vote: client id out of range");
    hits_gamma += flags.gamma[i] ? 1.0 : 0.0;
    hits_dev += flags.dev[i] ? 1.0 : 0.0;
  }
  const double size = static_cast<double>(outcome.suspicious.size());
  out.p_gamma = hits_gamma / size;
  out.p_dev = hits_dev / size;
  out.detected = out.p_gamma >= 0.5 || out.p_dev >= 0.5;
  if (out.detected) out.free_rider_list = outcome.suspicious;
  return out;
}

std::vector<std::size_t> wef_defense_baseline(std::span<const wef::WefMatrix> wefs,
                                              double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("baseline epsilon must be positive");
  const auto dev = dev_scores(wefs);
  const double xi = *std::max_element(dev.begin(), dev.end()) - epsilon;
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    if (dev[i] > xi) flagged.push_back(i);
  }
  return flagged;
}

std::vector<std::size_t> wef_defense_baseline(
    std::span<const std::vector<wef::WefMatrix>> history, double epsilon, bool accumulate) {
  if (history.empty()) throw ConfigError("baseline needs at least one round");
  if (!accumulate) return wef_defense_baseline(history.back(), epsilon);
  const std::size_t n = history.back().size();
  std::vector<wef::WefMatrix> summed;
  summed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<wef::WefMatrix> per_client;
    per_client.reserve(history.size());
    for (const auto& round : history) {
      if (round.size() != n) throw ShapeError("baseline history: client count changes");
      per_client.push_back(round[i]);
    }
    summed.push_back(wef::accumulate(per_client));
  }
  return wef_defense_baseline(summed, epsilon);
}

RoundAnalysis detect_round(std::span<const wef::WefMatrix> wefs,
                           std::span<const wef::WefMatrix> dev_inputs, const Matrix& current,
                           const Matrix* previous, int e, const DetectOptions& options) {
  RoundAnalysis out;
  if (previous == nullptr) return out;
  if (wefs.size() < 2) throw ConfigError("detection needs at least two clients");
  if (dev_inputs.size() != wefs.size()) throw ShapeError("dev inputs do not match clients");
  require_same_shapes(wefs, "detect_round");
  if (wefs.front().rows() != current.rows() || wefs.front().cols() != current.cols()) {
    throw ShapeError("detect_round: WEF shape does not match the penultimate layer");
  }
  out.active = true;

  const auto simulated = simulate_global_wef(current, *previous, e);
  out.scores.gamma = gamma_scores(wefs, simulated, options.gamma_mode);
  out.scores.dev = dev_scores(dev_inputs);
  const auto zg = robust_standardize(out.scores.gamma);
  const auto zd = robust_standardize(out.scores.dev);
  out.scores.z.resize(wefs.size());
  for (std::size_t i = 0; i < wefs.size(); ++i) out.scores.z[i] = {zg[i], zd[i]};

  out.cluster = decide_k(ward_hac(out.scores.z), out.scores.z);
  const auto flags = threshold_flags(out.scores.gamma, out.scores.dev);
  if (options.majority_vote) {
    out.decision = majority_vote(*out.cluster, flags);
  } else {
    out.decision.flags_gamma = flags.gamma;
    out.decision.flags_dev = flags.dev;
    out.decision.detected = out.cluster->k == 2;
    if (out.decision.detected) out.decision.free_rider_list = out.cluster->suspicious;
  }
  return out;
}

RoundAnalysis detect_round(std::span<const wef::WefMatrix> wefs, const Matrix& current,
                           const Matrix* previous, int e, const DetectOptions& options) {
  return detect_round(wefs, wefs, current, previous, e, options);
}

namespace {

constexpr std::array<std::pair<DetectorKind, std::string_view>, 5> kDetectorNames{{
    {DetectorKind::S2WEF, "S2WEF"},
    {DetectorKind::WEF_NA_BASELINE, "WEF_NA_BASELINE"},
    {DetectorKind::CLUSTER_ONLY, "CLUSTER_ONLY"},
    {DetectorKind::COS_ONLY_CLUSTER, "COS_ONLY_CLUSTER"},
    {DetectorKind::NONE, "NONE"},
}};

}  // namespace

std::string_view to_string(DetectorKind kind) {
  for (const auto& [k, name] : kDetectorNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<DetectorKind> parse_detector_kind(std::string_view name) {
  for (const auto& [k, n] : kDetectorNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

RoundAnalysis run_detector(DetectorKind kind, std::span<const wef::WefMatrix> wefs,
                           std::span<const wef::WefMatrix> dev_inputs, const Matrix& current,
                           const Matrix* previous, int e, double epsilon) {
  switch (kind) {
    case DetectorKind::S2WEF:
      return detect_round(wefs, dev_inputs, current, previous, e, {GammaMode::CosOverL1, true});
    case DetectorKind::CLUSTER_ONLY:
      return detect_round(wefs, dev_inputs, current, previous, e, {GammaMode::CosOverL1, false});
    case DetectorKind::COS_ONLY_CLUSTER:
      return detect_round(wefs, dev_inputs, current, previous, e, {GammaMode::CosOnly, false});
    case DetectorKind::WEF_NA_BASELINE: {
      RoundAnalysis out;
      if (previous == nullptr) return out;
      out.active = true;
      out.scores.dev = dev_scores(dev_inputs);
      out.decision.free_rider_list = wef_defense_baseline(dev_inputs, epsilon);
      out.decision.flags_dev.assign(wefs.size(), false);
      for (std::size_t i : out.decision.free_rider_list) out.decision.flags_dev[i] = true;
      out.decision.detected = !out.decision.free_rider_list.empty();
      return out;
    }
    case DetectorKind::NONE: {
      RoundAnalysis out;
      out.active = previous != nullptr;
      return out;
    }
  }
  throw ConfigError("unknown detector");
}

}  // namespace s2wef::detect

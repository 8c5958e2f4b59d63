#include "s2wef/attacks.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "s2wef/rng.hpp"

namespace s2wef::attacks {

namespace {

constexpr std::array<std::pair<AttackKind, std::string_view>, 5> kNames{{
    {AttackKind::RWA, "RWA"},
    {AttackKind::SPA, "SPA"},
    {AttackKind::DWA, "DWA"},
    {AttackKind::ADWA, "ADWA"},
    {AttackKind::AWCA, "AWCA"},
}};

FakeSubmission with_counterfeit(nn::ModelWeights fake, const nn::ModelWeights& global, int e,
                                bool use_abs) {
  auto f = wef::counterfeit_one_step(fake.penultimate(), global.penultimate(), e, use_abs);
  return {std::move(fake), std::move(f)};
}

const nn::ModelWeights& require_previous(const GlobalHistory& history, AttackKind kind) {
  if (history.previous == nullptr) {
    throw HistoryError(std::string(to_string(kind)) +
                       " needs two broadcast global models, only one is available");
  }
  return *history.previous;
}

void require_sigma(double sigma, const char* name) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError(std::string(name) + " must be finite and non-negative");
  }
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void AttackParams::validate() const {
  if (!(rwa_range > 0.0) || !std::isfinite(rwa_range)) {
    throw ConfigError("rwa_range must be positive");
  }
  require_sigma(adwa_sigma, "adwa_sigma");
  require_sigma(spa_sigma, "spa_sigma");
  require_sigma(awca_sigma, "awca_sigma");
}

FakeSubmission rwa(const nn::ModelWeights& global, double range, int e, bool use_abs,
                   std::uint64_t seed) {
  if (!(range > 0.0)) throw ConfigError("RWA range must be positive");
  Rng rng(seed);
  auto fake = nn::map_params(global, [&](double) { return rng.uniform(-range, range); });
  return with_counterfeit(std::move(fake), global, e, use_abs);
}

FakeSubmission dwa(const nn::ModelWeights& global, const nn::ModelWeights& previous, int e,
                   bool use_abs) {
  auto fake = nn::zip_with(global, previous, [](double g, double p) { return g + (g - p); });
  return with_counterfeit(std::move(fake), global, e, use_abs);
}

FakeSubmission adwa(const nn::ModelWeights& global, const nn::ModelWeights& previous,
                    double sigma, int e, bool use_abs, std::uint64_t seed) {
  require_sigma(sigma, "ADWA sigma");
  Rng rng(seed);
  auto fake = nn::zip_with(global, previous, [&](double g, double p) {
    return g + ((g - p) + sigma * rng.normal());
  });
  return with_counterfeit(std::move(fake), global, e, use_abs);
}

FakeSubmission spa(const nn::ModelWeights& global, double sigma, int e, bool use_abs,
                   std::uint64_t seed) {
  require_sigma(sigma, "SPA sigma");
  Rng rng(seed);
  auto fake = nn::map_params(global, [&](double g) { return g + sigma * rng.normal(); });
  return with_counterfeit(std::move(fake), global, e, use_abs);
}

FakeSubmission awca(const nn::ModelWeights& global, const nn::ModelWeights& previous, int e,
                    double sigma, std::uint64_t seed) {
  if (e < 1) throw ConfigError("AWCA needs e >= 1");
  require_sigma(sigma, "AWCA sigma");
  Rng rng(seed);
  const double steps = static_cast<double>(e);
  const auto step = nn::zip_with(global, previous, [steps](double g, double p) {
    return (g - p) / steps;
  });
  nn::ModelWeights w = global;
  const Matrix& start = global.penultimate();
  wef::WefMatrix f(start.rows(), start.cols(), e);
  for (int t = 1; t <= e; ++t) {
    nn::ModelWeights next = nn::zip_with(w, step, [&](double x, double d) {
      return x + d + sigma * rng.normal();
    });
    f = wef::wef_step(f, w.penultimate(), next.penultimate());
    w = std::move(next);
  }
  return {std::move(w), std::move(f)};
}

FakeSubmission generate(const AttackParams& params, const GlobalHistory& history, int e,
                        std::uint64_t seed) {
  if (history.current == nullptr) throw HistoryError("no broadcast global model");
  const nn::ModelWeights& global = *history.current;
  switch (params.kind) {
    case AttackKind::RWA:
      return rwa(global, params.rwa_range, e, params.use_abs, seed);
    case AttackKind::SPA:
      return spa(global, params.spa_sigma, e, params.use_abs, seed);
    case AttackKind::DWA:
      return dwa(global, require_previous(history, params.kind), e, params.use_abs);
    case AttackKind::ADWA:
      return adwa(global, require_previous(history, params.kind), params.adwa_sigma, e,
                  params.use_abs, seed);
    case AttackKind::AWCA:
      return awca(global, require_previous(history, params.kind), e, params.awca_sigma, seed);
  }
  throw ConfigError("unknown attack kind");
}

}  // namespace s2wef::attacks

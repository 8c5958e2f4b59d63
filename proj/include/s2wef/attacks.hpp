#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "s2wef/nn.hpp"
#include "s2wef/wef.hpp"

namespace s2wef::attacks {

enum class AttackKind { RWA, SPA, DWA, ADWA, AWCA };

std::string_view to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(std::string_view name);

struct AttackParams {
  AttackKind kind = AttackKind::DWA;
  double rwa_range = 1e-3;
  double adwa_sigma = 1e-3;
  double spa_sigma = 1e-3;
  double awca_sigma = 1e-5;
  /// Absolute-value comparison in the one-step counterfeit WEF.
  bool use_abs = true;

  void validate() const;
  friend bool operator==(const AttackParams&, const AttackParams&) = default;
};

/// Fabricated upload: model weights plus a WEF matrix over their penultimate layer.
struct FakeSubmission {
  nn::ModelWeights weights;
  wef::WefMatrix wef;
};

/// The broadcast global models an attacker can see at round T.
/// `previous` is null at the first round.
struct GlobalHistory {
  const nn::ModelWeights* current = nullptr;
  const nn::ModelWeights* previous = nullptr;
};

/// Random weight attack: every parameter uniform in [-range, range].
FakeSubmission rwa(const nn::ModelWeights& global, double range, int e, bool use_abs,
                   std::uint64_t seed);

/// Delta weight attack: global + (global - previous).
FakeSubmission dwa(const nn::ModelWeights& global, const nn::ModelWeights& previous, int e,
                   bool use_abs);

/// DWA update plus i.i.d. N(0, sigma) per parameter.
FakeSubmission adwa(const nn::ModelWeights& global, const nn::ModelWeights& previous,
                    double sigma, int e, bool use_abs, std::uint64_t seed);

/// Stochastic perturbation: global + N(0, sigma) per parameter.
FakeSubmission spa(const nn::ModelWeights& global, double sigma, int e, bool use_abs,
                   std::uint64_t seed);

/// Adaptive WEF-camouflage: the DWA update is split into e equal steps, each
/// with fresh N(0, sigma) noise, and the WEF matrix is built with the honest
/// per-iteration rule over the synthetic trajectory.
FakeSubmission awca(const nn::ModelWeights& global, const nn::ModelWeights& previous, int e,
                    double sigma, std::uint64_t seed);

/// Dispatches on params.kind. DWA, ADWA and AWCA throw HistoryError when
/// history.previous is null.
FakeSubmission generate(const AttackParams& params, const GlobalHistory& history, int e,
                        std::uint64_t seed);

}  // namespace s2wef::attacks

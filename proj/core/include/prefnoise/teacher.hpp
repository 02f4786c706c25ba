#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/rng.hpp"

namespace prefnoise {

/// Binary preference. `first` is y = 1 (τ1 ≻ τ2), `second` is y = 0.
enum class PreferenceLabel : std::uint8_t { first, second };

constexpr PreferenceLabel reversed(PreferenceLabel label) noexcept {
  return label == PreferenceLabel::first ? PreferenceLabel::second : PreferenceLabel::first;
}

/// 1.0 for `first`, 0.0 for `second`.
constexpr double as_target(PreferenceLabel label) noexcept {
  return label == PreferenceLabel::first ? 1.0 : 0.0;
}

std::string_view to_string(PreferenceLabel label);

/// A labeled comparison together with its noise provenance.
/// Invariant: flipped == (observed != ground_truth).
struct LabeledPreference {
  TrajectoryPair pair;
  PreferenceLabel observed = PreferenceLabel::first;
  PreferenceLabel ground_truth = PreferenceLabel::first;
  bool flipped = false;
  double flip_prob = 0.0;

  /// Noiseless sample: observed equals the oracle label.
  static LabeledPreference clean(TrajectoryPair pair, PreferenceLabel oracle);

  /// Copy with the observed label set relative to ground truth.
  LabeledPreference with_flip(bool flip, double prob) const;
};

/// Stochastic oracle: σ(G(τ1) - G(τ2)).
double oracle_prob(const TrajectoryPair& pair, double gamma);

/// Deterministic oracle. Returns nullopt for a tie (|ΔG| <= tie_band); callers
/// discard ties.
std::optional<PreferenceLabel> oracle_label(const TrajectoryPair& pair, double gamma,
                                            double tie_band = 0.0);

/// Keeps observed = oracle with probability 1 - flip_prob and reverses it otherwise.
/// Throws std::invalid_argument when flip_prob lies outside [0, 1].
LabeledPreference noisy_label(TrajectoryPair pair, double flip_prob, PreferenceLabel oracle,
                              SeededRng& rng);

/// Labels each pair with the deterministic oracle and drops ties.
std::vector<LabeledPreference> label_with_oracle(std::span<const TrajectoryPair> pairs,
                                                 double gamma, double tie_band = 0.0);

/// Fraction of samples whose observed label disagrees with ground truth.
double realized_flip_rate(std::span<const LabeledPreference> batch);

}  // namespace prefnoise

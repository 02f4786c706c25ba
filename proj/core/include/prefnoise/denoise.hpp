#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "prefnoise/reward.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise {

enum class ThresholdSchedule { constant, decaying };

std::string_view to_string(ThresholdSchedule schedule);
ThresholdSchedule threshold_schedule_from_string(std::string_view name);

/// KL-based discriminator settings. A sample is trusted when its label KL is below
/// base_threshold / (1 + decay * step) (decaying) or base_threshold (constant). With
/// flip_correction, suspects whose KL exceeds ln(1 / flip_delta) get their label
/// reversed.
struct DenoiserConfig {
  double base_threshold = 1.0;
  ThresholdSchedule schedule = ThresholdSchedule::constant;
  double decay = 0.01;
  bool flip_correction = true;
  double flip_delta = 0.1;

  void validate() const;
  double threshold_at(int step) const;
  double flip_bound() const;
};

struct DenoiseReport {
  std::vector<std::size_t> trusted;
  std::vector<std::size_t> suspect;
  std::vector<std::size_t> flipped;  // subset of suspect
  double threshold = 0.0;
  /// |suspect ∩ noisy| / |suspect|, 1 when nothing is flagged.
  double precision = 1.0;
  /// |suspect ∩ noisy| / |noisy|, 1 when the batch holds no noisy labels.
  double recall = 1.0;
};

/// KL(smoothed one-hot(observed) || (P, 1 - P)) for a model probability P(first).
double label_kl(double model_prob_first, PreferenceLabel observed);
double label_kl(const RewardNet& net, const LabeledPreference& sample);
double label_kl(const RewardEnsemble& ensemble, const LabeledPreference& sample);

/// Splits a batch into trusted and suspect samples by label KL. Precision and recall are
/// measured against each sample's hidden `flipped` provenance and are for reporting only.
DenoiseReport partition(std::span<const LabeledPreference> batch, const RewardNet& net,
                        const DenoiserConfig& cfg, int step);
DenoiseReport partition(std::span<const LabeledPreference> batch, const RewardEnsemble& ensemble,
                        const DenoiserConfig& cfg, int step);
/// Partition from precomputed per-sample KL values.
DenoiseReport partition_by_kl(std::span<const LabeledPreference> batch,
                              std::span<const double> kl, const DenoiserConfig& cfg, int step);

/// Training set implied by a report: trusted samples plus the flipped suspects with
/// their labels reversed. Suspects that were not flipped are dropped.
std::vector<LabeledPreference> apply_corrections(std::span<const LabeledPreference> batch,
                                                 const DenoiseReport& report);

/// Reverses the observed label, keeping `flipped` consistent with ground truth.
LabeledPreference flip_observed(const LabeledPreference& sample);

}  // namespace prefnoise

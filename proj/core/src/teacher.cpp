#include "prefnoise/teacher.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "prefnoise/math.hpp"

namespace prefnoise {

std::string_view to_string(PreferenceLabel label) {
  return label == PreferenceLabel::first ? "first" : "second";
}

LabeledPreference LabeledPreference::clean(TrajectoryPair pair, PreferenceLabel oracle) {
  return {std::move(pair), oracle, oracle, false, 0.0};
}

LabeledPreference LabeledPreference::with_flip(bool flip, double prob) const {
  LabeledPreference out = *this;
  out.observed = flip ? reversed(ground_truth) : ground_truth;
  out.flipped = flip;
  out.flip_prob = prob;
  return out;
}

double oracle_prob(const TrajectoryPair& pair, double gamma) {
  return sigmoid(true_return(pair.first, gamma) - true_return(pair.second, gamma));
}

std::optional<PreferenceLabel> oracle_label(const TrajectoryPair& pair, double gamma,
                                            double tie_band) {
  const double diff = true_return(pair.first, gamma) - true_return(pair.second, gamma);
  if (std::abs(diff) <= tie_band) return std::nullopt;
  return diff > 0.0 ? PreferenceLabel::first : PreferenceLabel::second;
}

LabeledPreference noisy_label(TrajectoryPair pair, double flip_prob, PreferenceLabel oracle,
                              SeededRng& rng) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) {
    throw std::invalid_argument("flip probability must lie in [0, 1], got " +
                                std::to_string(flip_prob));
  }
  const bool flip = rng.bernoulli(flip_prob);
  return LabeledPreference::clean(std::move(pair), oracle).with_flip(flip, flip_prob);
}

std::vector<LabeledPreference> label_with_oracle(std::span<const TrajectoryPair> pairs,
                                                 double gamma, double tie_band) {
  std::vector<LabeledPreference> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    if (auto label = oracle_label(pair, gamma, tie_band)) {
      out.push_back(LabeledPreference::clean(pair, *label));
    }
  }
  return out;
}

double realized_flip_rate(std::span<const LabeledPreference> batch) {
  if (batch.empty()) return 0.0;
  std::size_t flips = 0;
  for (const auto& s : batch) flips += s.observed != s.ground_truth ? 1 : 0;
  return static_cast<double>(flips) / static_cast<double>(batch.size());
}

}  // namespace prefnoise

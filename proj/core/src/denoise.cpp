#include "prefnoise/denoise.hpp"

#include <cmath>
#include <string>

#include "prefnoise/errors.hpp"
#include "prefnoise/math.hpp"

namespace prefnoise {

std::string_view to_string(ThresholdSchedule schedule) {
  return schedule == ThresholdSchedule::constant ? "constant" : "decaying";
}

ThresholdSchedule threshold_schedule_from_string(std::string_view name) {
  if (name == "constant") return ThresholdSchedule::constant;
  if (name == "decaying") return ThresholdSchedule::decaying;
  throw ConfigError("unknown threshold schedule '" + std::string(name) + "'");
}

void DenoiserConfig::validate() const {
  if (!(base_threshold > 0.0)) throw ConfigError("denoiser base_threshold must be > 0");
  if (decay < 0.0) throw ConfigError("denoiser decay must be >= 0");
  if (!(flip_delta > 0.0 && flip_delta < 1.0)) {
    throw ConfigError("denoiser flip_delta must lie in (0, 1)");
  }
}

double DenoiserConfig::threshold_at(int step) const {
  if (schedule == ThresholdSchedule::constant) return base_threshold;
  return base_threshold / (1.0 + decay * static_cast<double>(step));
}

double DenoiserConfig::flip_bound() const { return std::log(1.0 / flip_delta); }

double label_kl(double model_prob_first, PreferenceLabel observed) {
  const double q = observed == PreferenceLabel::first ? 1.0 - kLabelSmoothing : kLabelSmoothing;
  return bernoulli_kl(q, model_prob_first);
}

double label_kl(const RewardNet& net, const LabeledPreference& sample) {
  return label_kl(bt_prob(net, sample.pair), sample.observed);
}

double label_kl(const RewardEnsemble& ensemble, const LabeledPreference& sample) {
  return label_kl(ensemble.preference_prob(sample.pair), sample.observed);
}

DenoiseReport partition_by_kl(std::span<const LabeledPreference> batch,
                              std::span<const double> kl, const DenoiserConfig& cfg, int step) {
  cfg.validate();
  if (kl.size() != batch.size()) {
    throw std::invalid_argument("partition_by_kl: " + std::to_string(kl.size()) +
                                " KL values for " + std::to_string(batch.size()) + " samples");
  }
  DenoiseReport report;
  report.threshold = cfg.threshold_at(step);
  const double flip_bound = cfg.flip_bound();
  std::size_t noisy = 0;
  std::size_t caught = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const bool is_noisy = batch[i].flipped;
    noisy += is_noisy ? 1 : 0;
    if (kl[i] < report.threshold) {
      report.trusted.push_back(i);
      continue;
    }
    report.suspect.push_back(i);
    caught += is_noisy ? 1 : 0;
    if (cfg.flip_correction && kl[i] > flip_bound) report.flipped.push_back(i);
  }
  if (!report.suspect.empty()) {
    report.precision = static_cast<double>(caught) / static_cast<double>(report.suspect.size());
  }
  if (noisy > 0) report.recall = static_cast<double>(caught) / static_cast<double>(noisy);
  return report;
}

DenoiseReport partition(std::span<const LabeledPreference> batch, const RewardNet& net,
                        const DenoiserConfig& cfg, int step) {
  std::vector<double> kl;
  kl.reserve(batch.size());
  for (const auto& s : batch) kl.push_back(label_kl(net, s));
  return partition_by_kl(batch, kl, cfg, step);
}

DenoiseReport partition(std::span<const LabeledPreference> batch, const RewardEnsemble& ensemble,
                        const DenoiserConfig& cfg, int step) {
  std::vector<Trajectory> trajs;
  trajs.reserve(2 * batch.size());
  for (const auto& s : batch) {
    trajs.push_back(s.pair.first);
    trajs.push_back(s.pair.second);
  }
  const auto returns = ensemble.member_returns(trajs);
  const double k = static_cast<double>(returns.size());
  std::vector<double> kl;
  kl.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double g1 = 0.0;
    double g2 = 0.0;
    for (const auto& m : returns) {
      g1 += m[2 * i];
      g2 += m[2 * i + 1];
    }
    kl.push_back(label_kl(bt_prob_from_returns(g1 / k, g2 / k), batch[i].observed));
  }
  return partition_by_kl(batch, kl, cfg, step);
}

LabeledPreference flip_observed(const LabeledPreference& sample) {
  LabeledPreference out = sample;
  out.observed = reversed(sample.observed);
  out.flipped = out.observed != out.ground_truth;
  return out;
}

std::vector<LabeledPreference> apply_corrections(std::span<const LabeledPreference> batch,
                                                 const DenoiseReport& report) {
  std::vector<LabeledPreference> out;
  out.reserve(report.trusted.size() + report.flipped.size());
  for (auto i : report.trusted) out.push_back(batch[i]);
  for (auto i : report.flipped) out.push_back(flip_observed(batch[i]));
  return out;
}

}  // namespace prefnoise

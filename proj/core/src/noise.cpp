#include "prefnoise/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "prefnoise/errors.hpp"
#include "prefnoise/math.hpp"

namespace prefnoise {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::similarity_l2: return "similarity_l2";
    case NoiseKind::similarity_latent: return "similarity_latent";
    case NoiseKind::magnitude: return "magnitude";
    case NoiseKind::uncertainty: return "uncertainty";
    case NoiseKind::adversarial: return "adversarial";
    case NoiseKind::hybrid: return "hybrid";
  }
  return "uniform";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  for (auto k : {NoiseKind::uniform, NoiseKind::similarity_l2, NoiseKind::similarity_latent,
                 NoiseKind::magnitude, NoiseKind::uncertainty, NoiseKind::adversarial,
                 NoiseKind::hybrid}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown noise kind '" + std::string(name) + "'");
}

namespace {

bool is_feature_kind(NoiseKind k) {
  return k == NoiseKind::similarity_l2 || k == NoiseKind::similarity_latent ||
         k == NoiseKind::magnitude;
}

}  // namespace

void NoiseModelSpec::validate() const {
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) {
    throw ConfigError("noise target rate must lie in [0, 1]");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("noise alpha must lie in [0, 1]");
  if (kind == NoiseKind::magnitude) {
    if (!(beta > 0.0)) throw ConfigError("magnitude noise needs beta > 0");
    if (feature_subset.empty()) throw ConfigError("magnitude noise needs a feature_subset");
  }
  if (kind == NoiseKind::hybrid) {
    if (!component) throw ConfigError("hybrid noise needs a feature component");
    if (!is_feature_kind(component->kind)) {
      throw ConfigError("hybrid component must be similarity_l2, similarity_latent or magnitude");
    }
    component->validate();
  }
}

std::string NoiseModelSpec::label() const {
  if (kind == NoiseKind::hybrid && component) {
    return "hybrid_" + std::string(to_string(component->kind));
  }
  return std::string(to_string(kind));
}

bool NoiseModelSpec::threshold_based() const noexcept {
  return kind == NoiseKind::uncertainty || kind == NoiseKind::adversarial ||
         kind == NoiseKind::hybrid;
}

bool NoiseModelSpec::needs_ensemble() const noexcept { return threshold_based(); }

bool NoiseModelSpec::needs_encoder() const noexcept {
  return kind == NoiseKind::similarity_latent ||
         (kind == NoiseKind::hybrid && component &&
          component->kind == NoiseKind::similarity_latent);
}

double trajectory_distance(const TrajectoryPair& pair, SimilarityMetric metric,
                           const Encoder* encoder) {
  if (metric == SimilarityMetric::latent) {
    if (encoder == nullptr) {
      throw std::invalid_argument("latent similarity noise requires an encoder");
    }
    return embedding_distance(*encoder, pair.first, pair.second);
  }
  const auto a = pair.first.flat_features();
  const auto b = pair.second.flat_features();
  if (a.size() != b.size()) throw std::invalid_argument("trajectories differ in feature length");
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss);
}

double similarity_flip_prob(const TrajectoryPair& pair, SimilarityMetric metric,
                            const Encoder* encoder) {
  const double d = trajectory_distance(pair, metric, encoder);
  if (d == 0.0) return 1.0;
  return std::min(1.0, 1.0 / (d * d));
}

double feature_magnitude(const Trajectory& traj, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("feature subset must not be empty");
  const std::size_t width = traj.step_dim();
  for (auto idx : subset) {
    if (idx >= width) {
      throw std::invalid_argument("feature index " + std::to_string(idx) +
                                  " out of range for per-step width " + std::to_string(width));
    }
  }
  const std::size_t h = traj.horizon();
  double total = 0.0;
  for (std::size_t t = 0; t < h; ++t) {
    const auto s = traj.state(t);
    const auto a = traj.action(t);
    double ss = 0.0;
    for (auto idx : subset) {
      const double v = idx < s.size() ? s[idx] : a[idx - s.size()];
      ss += v * v;
    }
    total += std::sqrt(ss);
  }
  return h == 0 ? 0.0 : total / static_cast<double>(h);
}

double magnitude_flip_prob(const TrajectoryPair& pair, double beta,
                           std::span<const std::size_t> subset) {
  const double delta = feature_magnitude(pair.first, subset) - feature_magnitude(pair.second, subset);
  return sigmoid(beta * std::log1p(std::abs(delta)) * sign(delta));
}

namespace {

std::vector<NoiseScore> uncertainty_from_returns(std::size_t n,
                                                 const std::vector<std::vector<double>>& returns) {
  // returns[k] holds [G_k(first_0..first_{n-1}), G_k(second_0..second_{n-1})].
  std::vector<NoiseScore> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (const auto& member : returns) total += std::abs(member[i] - member[n + i]);
    out[i] = {i, total / static_cast<double>(returns.size()), 0.0};
  }
  return out;
}

template <typename PairOf>
std::vector<Trajectory> gather_sides(std::size_t n, PairOf&& pair_of) {
  std::vector<Trajectory> trajs;
  trajs.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) trajs.push_back(pair_of(i).first);
  for (std::size_t i = 0; i < n; ++i) trajs.push_back(pair_of(i).second);
  return trajs;
}

}  // namespace

std::vector<NoiseScore> uncertainty_scores(std::span<const TrajectoryPair> batch,
                                           const RewardEnsemble& ensemble) {
  const auto trajs =
      gather_sides(batch.size(), [&](std::size_t i) -> const TrajectoryPair& { return batch[i]; });
  return uncertainty_from_returns(batch.size(), ensemble.member_returns(trajs));
}

std::vector<NoiseScore> uncertainty_scores(std::span<const LabeledPreference> batch,
                                           const RewardEnsemble& ensemble) {
  const auto trajs = gather_sides(
      batch.size(), [&](std::size_t i) -> const TrajectoryPair& { return batch[i].pair; });
  return uncertainty_from_returns(batch.size(), ensemble.member_returns(trajs));
}

double wrong_teacher_kl(double model_prob_first, PreferenceLabel ground_truth) {
  // The wrong teacher always prefers the side ground truth rejects.
  const double wrong_first =
      ground_truth == PreferenceLabel::first ? kLabelSmoothing : 1.0 - kLabelSmoothing;
  return bernoulli_kl(wrong_first, model_prob_first);
}

std::vector<NoiseScore> adversarial_scores(std::span<const LabeledPreference> batch,
                                           const RewardEnsemble& ensemble) {
  const std::size_t n = batch.size();
  const auto trajs = gather_sides(
      n, [&](std::size_t i) -> const TrajectoryPair& { return batch[i].pair; });
  const auto returns = ensemble.member_returns(trajs);
  std::vector<NoiseScore> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double g1 = 0.0;
    double g2 = 0.0;
    for (const auto& member : returns) {
      g1 += member[i];
      g2 += member[n + i];
    }
    const double k = static_cast<double>(returns.size());
    const double p = bt_prob_from_returns(g1 / k, g2 / k);
    out[i] = {i, wrong_teacher_kl(p, batch[i].ground_truth), 0.0};
  }
  return out;
}

std::vector<NoiseScore> hybrid_scores(double alpha, std::span<const double> feature_scores,
                                      std::span<const double> uncertainty_scores) {
  if (feature_scores.size() != uncertainty_scores.size()) {
    throw std::invalid_argument("hybrid score inputs differ in length (" +
                                std::to_string(feature_scores.size()) + " vs " +
                                std::to_string(uncertainty_scores.size()) + ")");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  std::vector<NoiseScore> out(feature_scores.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {i, alpha * feature_scores[i] + (1.0 - alpha) * uncertainty_scores[i], 0.0};
  }
  return out;
}

std::vector<double> feature_scores(std::span<const LabeledPreference> batch,
                                   const NoiseModelSpec& component, const Encoder* encoder) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    switch (component.kind) {
      case NoiseKind::similarity_l2:
        out.push_back(trajectory_distance(s.pair, SimilarityMetric::l2));
        break;
      case NoiseKind::similarity_latent:
        out.push_back(trajectory_distance(s.pair, SimilarityMetric::latent, encoder));
        break;
      case NoiseKind::magnitude:
        out.push_back(1.0 - magnitude_flip_prob(s.pair, component.beta, component.feature_subset));
        break;
      default:
        throw std::invalid_argument("'" + std::string(to_string(component.kind)) +
                                    "' does not define a feature score");
    }
  }
  return out;
}

std::size_t target_flip_count(double epsilon, std::size_t n) {
  const double raw = epsilon * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

Calibration calibrate_threshold(std::span<const double> scores, double epsilon,
                                FlipDirection direction, std::optional<std::size_t> max_flips) {
  if (scores.empty()) throw std::invalid_argument("calibrate_threshold needs non-empty scores");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
  std::size_t k = target_flip_count(epsilon, scores.size());
  if (max_flips) k = std::min(k, *max_flips);

  std::vector<double> keyed(scores.begin(), scores.end());
  if (direction == FlipDirection::flip_above) {
    for (auto& v : keyed) v = -v;
  }
  const auto order = argsort_stable(keyed);
  Calibration cal;
  cal.flip_set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(cal.flip_set.begin(), cal.flip_set.end());
  if (k < scores.size()) {
    cal.threshold = scores[order[k]];
  } else {
    cal.threshold = direction == FlipDirection::flip_below
                        ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
  }
  return cal;
}

std::vector<double> rescale_to_mean(std::span<const double> probs, double target) {
  const std::size_t n = probs.size();
  std::vector<double> out(n, 0.0);
  if (n == 0 || target <= 0.0) return out;
  if (target >= 1.0) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  const double budget = target * static_cast<double>(n);
  std::vector<double> sorted(probs.begin(), probs.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Find the number s of saturated entries: the largest s entries map to 1 and the
  // remaining ones scale by c = (budget - s) / Σ_rest, consistent when c * p_s < 1.
  double rest = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (rest <= 0.0) {
    std::fill(out.begin(), out.end(), target);
    return out;
  }
  double scale = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double c = (budget - static_cast<double>(s)) / rest;
    if (c * sorted[s] <= 1.0) {
      scale = c;
      break;
    }
    rest -= sorted[s];
    if (rest <= 0.0) {
      scale = std::numeric_limits<double>::infinity();
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = probs[i] > 0.0 ? std::min(1.0, scale * probs[i]) : 0.0;
  }
  return out;
}

namespace {

NoiseOutcome finish(std::span<const LabeledPreference> batch, const std::vector<bool>& flip,
                    const std::vector<double>& probs) {
  NoiseOutcome out;
  out.labels.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.labels.push_back(batch[i].with_flip(flip[i], probs[i]));
    out.flips += flip[i] ? 1 : 0;
  }
  out.realized_rate =
      batch.empty() ? 0.0 : static_cast<double>(out.flips) / static_cast<double>(batch.size());
  return out;
}

// Keeps at most `cap` of the drawn flips, choosing the survivors uniformly.
void apply_cap(std::vector<bool>& flip, std::size_t cap, SeededRng& rng) {
  std::vector<std::size_t> drawn;
  for (std::size_t i = 0; i < flip.size(); ++i) {
    if (flip[i]) drawn.push_back(i);
  }
  if (drawn.size() <= cap) return;
  std::shuffle(drawn.begin(), drawn.end(), rng.engine());
  for (std::size_t j = cap; j < drawn.size(); ++j) flip[drawn[j]] = false;
}

}  // namespace

NoiseOutcome apply_noise(std::span<const LabeledPreference> batch, const NoiseModelSpec& spec,
                         const RewardEnsemble* ensemble, const Encoder* encoder, SeededRng& rng,
                         std::optional<double> fixed_threshold) {
  spec.validate();
  if (spec.needs_ensemble() && ensemble == nullptr) {
    throw std::invalid_argument("'" + spec.label() + "' noise requires a reward ensemble");
  }
  if (spec.needs_encoder() && encoder == nullptr) {
    throw std::invalid_argument("'" + spec.label() + "' noise requires a trained encoder");
  }
  const std::size_t n = batch.size();
  std::vector<bool> flip(n, false);
  std::vector<double> probs(n, 0.0);
  if (n == 0 || spec.target_rate == 0.0) {
    return finish(batch, flip, probs);
  }

  if (spec.threshold_based()) {
    std::vector<double> scores;
    switch (spec.kind) {
      case NoiseKind::uncertainty:
        for (const auto& s : uncertainty_scores(batch, *ensemble)) scores.push_back(s.score);
        break;
      case NoiseKind::adversarial:
        for (const auto& s : adversarial_scores(batch, *ensemble)) scores.push_back(s.score);
        break;
      default: {
        const auto f = rank_normalize(feature_scores(batch, *spec.component, encoder));
        std::vector<double> u;
        for (const auto& s : uncertainty_scores(batch, *ensemble)) u.push_back(s.score);
        const auto ur = rank_normalize(u);
        for (const auto& s : hybrid_scores(spec.alpha, f, ur)) scores.push_back(s.score);
        break;
      }
    }
    NoiseOutcome out;
    if (fixed_threshold) {
      for (std::size_t i = 0; i < n; ++i) flip[i] = scores[i] < *fixed_threshold;
      if (spec.max_flips_per_batch) apply_cap(flip, *spec.max_flips_per_batch, rng);
      out = finish(batch, flip, std::vector<double>(flip.begin(), flip.end()));
      out.threshold = fixed_threshold;
      return out;
    }
    const auto cal = calibrate_threshold(scores, spec.target_rate, FlipDirection::flip_below,
                                         spec.max_flips_per_batch);
    for (auto i : cal.flip_set) {
      flip[i] = true;
      probs[i] = 1.0;
    }
    out = finish(batch, flip, probs);
    out.threshold = cal.threshold;
    return out;
  }

  std::optional<std::size_t> cap = spec.max_flips_per_batch;
  if (spec.kind == NoiseKind::uniform) {
    std::fill(probs.begin(), probs.end(), spec.target_rate);
  } else {
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pair = batch[i].pair;
      switch (spec.kind) {
        case NoiseKind::similarity_l2:
          raw[i] = similarity_flip_prob(pair, SimilarityMetric::l2);
          break;
        case NoiseKind::similarity_latent:
          raw[i] = similarity_flip_prob(pair, SimilarityMetric::latent, encoder);
          break;
        case NoiseKind::magnitude:
          raw[i] = magnitude_flip_prob(pair, spec.beta, spec.feature_subset);
          break;
        default:
          break;
      }
    }
    probs = spec.mode == ProbabilityMode::rescaled ? rescale_to_mean(raw, spec.target_rate) : raw;
    if (spec.kind == NoiseKind::magnitude && !cap) {
      cap = static_cast<std::size_t>(std::ceil(spec.target_rate * static_cast<double>(n) - 1e-9));
    }
  }
  for (std::size_t i = 0; i < n; ++i) flip[i] = rng.bernoulli(probs[i]);
  if (cap) apply_cap(flip, *cap, rng);
  return finish(batch, flip, probs);
}

std::vector<NoiseModelSpec> standard_noise_suite(double target_rate,
                                                 std::vector<std::size_t> magnitude_subset,
                                                 double hybrid_alpha) {
  auto make = [&](NoiseKind kind) {
    NoiseModelSpec s;
    s.kind = kind;
    s.target_rate = target_rate;
    if (kind == NoiseKind::magnitude) s.feature_subset = magnitude_subset;
    return s;
  };
  auto hybrid = [&](NoiseKind component) {
    NoiseModelSpec s = make(NoiseKind::hybrid);
    s.alpha = hybrid_alpha;
    s.component = std::make_shared<const NoiseModelSpec>(make(component));
    return s;
  };
  return {make(NoiseKind::uniform),
          make(NoiseKind::similarity_l2),
          make(NoiseKind::similarity_latent),
          make(NoiseKind::magnitude),
          make(NoiseKind::uncertainty),
          make(NoiseKind::adversarial),
          hybrid(NoiseKind::similarity_l2),
          hybrid(NoiseKind::similarity_latent),
          hybrid(NoiseKind::magnitude)};
}

}  // namespace prefnoise

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/latent.hpp"
#include "prefnoise/reward.hpp"
#include "prefnoise/rng.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise {

enum class NoiseKind {
  uniform,
  similarity_l2,
  similarity_latent,
  magnitude,
  uncertainty,
  adversarial,
  hybrid,
};

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

/// How probabilistic kinds (similarity, magnitude) turn N(τ1, τ2) into flips.
/// `rescaled` scales the batch so its mean flip probability equals the target rate;
/// `raw` samples Bernoulli(N) as is.
enum class ProbabilityMode { rescaled, raw };

enum class FlipDirection { flip_below, flip_above };

enum class SimilarityMetric { l2, latent };

/// Tagged noise configuration. Which fields matter depends on `kind`:
///   magnitude         beta, feature_subset
///   hybrid            alpha, component (a similarity or magnitude spec)
///   every kind        target_rate, max_flips_per_batch
struct NoiseModelSpec {
  NoiseKind kind = NoiseKind::uniform;
  double target_rate = 0.0;
  double beta = 1.0;
  double alpha = 0.5;
  std::vector<std::size_t> feature_subset;
  std::shared_ptr<const NoiseModelSpec> component;
  std::optional<std::size_t> max_flips_per_batch;
  ProbabilityMode mode = ProbabilityMode::rescaled;

  void validate() const;
  /// Stable name used in CSV output, e.g. "uniform" or "hybrid_magnitude".
  std::string label() const;
  /// True for kinds selected by a calibrated threshold (exact flip counts).
  bool threshold_based() const noexcept;
  bool needs_ensemble() const noexcept;
  bool needs_encoder() const noexcept;
};

struct NoiseScore {
  std::size_t pair_index = 0;
  double score = 0.0;
  double flip_prob = 0.0;
};

/// Distance between the flattened trajectories (l2) or their embeddings (latent).
double trajectory_distance(const TrajectoryPair& pair, SimilarityMetric metric,
                           const Encoder* encoder = nullptr);

/// min(1, 1 / D^2); D = 0 gives 1. Throws std::invalid_argument for the latent metric
/// without an encoder.
double similarity_flip_prob(const TrajectoryPair& pair, SimilarityMetric metric,
                            const Encoder* encoder = nullptr);

/// (1/H) Σ_t ||x_t[subset]||_2 over per-step (state, action) features.
double feature_magnitude(const Trajectory& traj, std::span<const std::size_t> subset);

/// σ(β log(1 + |Δ|) sign(Δ)), Δ = ||φ(τ1)|| - ||φ(τ2)||. Throws std::invalid_argument
/// for an empty or out-of-range subset.
double magnitude_flip_prob(const TrajectoryPair& pair, double beta,
                           std::span<const std::size_t> subset);

/// Ensemble uncertainty per pair; smaller score = flipped first.
std::vector<NoiseScore> uncertainty_scores(std::span<const TrajectoryPair> batch,
                                           const RewardEnsemble& ensemble);
std::vector<NoiseScore> uncertainty_scores(std::span<const LabeledPreference> batch,
                                           const RewardEnsemble& ensemble);

/// KL(T_w || T_θ): the smoothed one-hot wrong teacher (opposite of ground truth) against
/// the model's Bradley-Terry distribution with P(first) = model_prob_first.
double wrong_teacher_kl(double model_prob_first, PreferenceLabel ground_truth);

/// Per-pair wrong_teacher_kl under the ensemble; smaller score = flipped first.
std::vector<NoiseScore> adversarial_scores(std::span<const LabeledPreference> batch,
                                           const RewardEnsemble& ensemble);

/// α·feature + (1-α)·uncertainty elementwise. Throws std::invalid_argument on a length
/// mismatch or α outside [0, 1].
std::vector<NoiseScore> hybrid_scores(double alpha, std::span<const double> feature_scores,
                                      std::span<const double> uncertainty_scores);

/// Feature-based score for a hybrid component, oriented so smaller = flipped first:
/// the distance for similarity kinds, 1 - N for magnitude.
std::vector<double> feature_scores(std::span<const LabeledPreference> batch,
                                   const NoiseModelSpec& component, const Encoder* encoder);

struct Calibration {
  /// Boundary score: the first unselected score in flip order (±inf when all are
  /// selected). Equal scores at the boundary are resolved by pair index.
  double threshold = 0.0;
  std::vector<std::size_t> flip_set;  // ascending pair indices
};

/// Selects exactly floor(ε n) scores on the flip side, ties broken by lowest index.
/// Throws std::invalid_argument on empty scores or ε outside [0, 1].
Calibration calibrate_threshold(std::span<const double> scores, double epsilon,
                                FlipDirection direction,
                                std::optional<std::size_t> max_flips = std::nullopt);

/// floor(ε n) robust to representation error (0.3 * 100 -> 30).
std::size_t target_flip_count(double epsilon, std::size_t n);

/// Scales probabilities by c so that Σ min(1, c p_i) = target * n. When every p_i is 0
/// the target is spread uniformly.
std::vector<double> rescale_to_mean(std::span<const double> probs, double target);

struct NoiseOutcome {
  std::vector<LabeledPreference> labels;
  std::size_t flips = 0;
  double realized_rate = 0.0;
  /// Calibrated threshold for threshold-based kinds.
  std::optional<double> threshold;
};

/// Corrupts a batch of oracle-labelled preferences. Each output sample's observed
/// label is ground truth, reversed when flipped, with flip provenance recorded.
/// `fixed_threshold` reuses a previously calibrated threshold instead of recalibrating.
/// Throws std::invalid_argument when the kind needs an ensemble or encoder that is
/// missing.
NoiseOutcome apply_noise(std::span<const LabeledPreference> batch, const NoiseModelSpec& spec,
                         const RewardEnsemble* ensemble, const Encoder* encoder, SeededRng& rng,
                         std::optional<double> fixed_threshold = std::nullopt);

/// The nine configurations compared in the experiments: uniform plus eight
/// feature-dependent kinds (L2/latent similarity, magnitude, uncertainty, adversarial and
/// the three hybrids), at the given target rate. `magnitude_subset` selects the
/// per-step features for magnitude noise.
std::vector<NoiseModelSpec> standard_noise_suite(double target_rate,
                                                 std::vector<std::size_t> magnitude_subset,
                                                 double hybrid_alpha = 0.5);

}  // namespace prefnoise

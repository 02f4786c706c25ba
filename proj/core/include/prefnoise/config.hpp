#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prefnoise/agent.hpp"
#include "prefnoise/denoise.hpp"
#include "prefnoise/env.hpp"
#include "prefnoise/latent.hpp"
#include "prefnoise/noise.hpp"
#include "prefnoise/remote_teacher.hpp"
#include "prefnoise/reward.hpp"

namespace prefnoise {

inline constexpr int kConfigSchemaVersion = 1;

enum class TeacherKind { scripted, remote };

std::string_view to_string(TeacherKind kind);

/// Noise thresholds for threshold-based kinds: recalibrated on every query batch, or
/// calibrated on the first batch and reused.
enum class ThresholdScope { per_batch, global };

struct ProtocolConfig {
  std::size_t queries_per_round = 50;
  int rounds = 20;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t initial_rollouts = 200;
  std::size_t rollouts_per_round = 50;  // half uniform random, half current policy
  std::size_t heldout_pairs = 200;
  long policy_steps = 20000;
  int eval_episodes = 20;
  double tie_band = 0.0;
  int denoise_warmup_rounds = 1;  // rounds before the denoiser starts filtering
  ThresholdScope threshold_scope = ThresholdScope::per_batch;
  std::vector<double> sweep_rates = {0.1, 0.2, 0.3, 0.4};

  void validate() const;
};

struct ExperimentConfig {
  EnvSpec env;
  NoiseModelSpec noise;
  TeacherKind teacher = TeacherKind::scripted;
  std::optional<RemoteTeacherConfig> remote;
  std::optional<DenoiserConfig> denoiser;
  TrainConfig train;
  EncoderConfig encoder;  // input_dim is derived from the environment
  AgentConfig agent;
  ProtocolConfig protocol;
  std::string output_path = "results.csv";

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

/// A parsed config file. `noise_kinds` holds every entry when the file lists several
/// noise models (for sweeps); `base.noise` is the first of them.
struct ParsedConfig {
  ExperimentConfig base;
  std::vector<NoiseModelSpec> noise_kinds;
  bool noise_given = false;  // false when the file has no "noise" entry
};

/// Parses the JSON schema. Unknown keys, wrong types and invalid values throw
/// ConfigError with the JSON path of the offending field.
ParsedConfig parse_config(const nlohmann::json& doc);
ParsedConfig parse_config_text(std::string_view text);
ParsedConfig load_config(const std::string& path);

nlohmann::json noise_to_json(const NoiseModelSpec& spec);
NoiseModelSpec noise_from_json(const nlohmann::json& node, EnvKind env_kind);

/// Per-step features used by magnitude noise when none are configured:
/// position for gridworld, action for pointmass.
std::vector<std::size_t> default_magnitude_subset(EnvKind kind);

}  // namespace prefnoise

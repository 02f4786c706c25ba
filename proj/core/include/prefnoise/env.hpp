#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefnoise/rng.hpp"

namespace prefnoise {

enum class EnvKind { gridworld, pointmass };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

struct EnvSpec {
  EnvKind kind = EnvKind::gridworld;
  int grid_size = 8;       // gridworld: cells per side
  double bound = 1.0;      // pointmass: state box is [-bound, bound]^2
  int horizon = 20;        // segment length H
  double gamma = 1.0;
  std::uint64_t seed = 0;
  bool fixed_start = false;  // start at a fixed corner instead of a random cell/point

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// A fixed-length segment. States and actions are stored row-major in flat buffers.
///
/// `true_rewards` is ground truth. Only teacher, metric and evaluation code reads it;
/// reward-model training works from observed labels and (state, action) features.
struct Trajectory {
  std::uint64_t id = 0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> states;        // (H + 1) * state_dim
  std::vector<double> actions;       // H * action_dim
  std::vector<double> true_rewards;  // H

  std::size_t horizon() const noexcept { return true_rewards.size(); }
  std::span<const double> state(std::size_t t) const {
    return {states.data() + t * state_dim, state_dim};
  }
  std::span<const double> action(std::size_t t) const {
    return {actions.data() + t * action_dim, action_dim};
  }
  /// Per-step feature width: state_dim + action_dim.
  std::size_t step_dim() const noexcept { return state_dim + action_dim; }
  /// Concatenated (s_t, a_t) for t < H, the flattened trajectory used by distance
  /// metrics and the encoder. Length H * step_dim().
  std::vector<double> flat_features() const;

  bool operator==(const Trajectory&) const = default;
};

struct TrajectoryPair {
  Trajectory first;
  Trajectory second;

  TrajectoryPair swapped() const { return {second, first}; }
};

/// Builds a pair; throws std::invalid_argument when both sides share an id.
TrajectoryPair make_pair(Trajectory first, Trajectory second);

/// Deterministic 2-D environment with a hidden ground-truth reward.
///
/// gridworld: cells (x, y) in [0, n)^2, goal at (n-1, n-1), four moves, walls block,
/// the goal is absorbing, reward +1 whenever the next cell is the goal.
/// pointmass: state in [-b, b]^2, action in [-1, 1]^2, s' = clip(s + 0.1 b a),
/// reward -|s'|^2.
class Environment {
 public:
  explicit Environment(EnvSpec spec);

  const EnvSpec& spec() const noexcept { return spec_; }
  EnvKind kind() const noexcept { return spec_.kind; }
  int horizon() const noexcept { return spec_.horizon; }
  std::size_t state_dim() const noexcept { return 2; }
  std::size_t action_dim() const noexcept { return 2; }
  std::size_t step_dim() const noexcept { return 4; }

  // Discrete structure (gridworld only; pointmass reports 0).
  int num_cells() const noexcept;
  int num_actions() const noexcept;
  int goal_cell() const noexcept;
  int start_cell() const noexcept;  // used when fixed_start
  int cell_of(std::span<const double> state) const;
  std::array<double, 2> state_of_cell(int cell) const;
  std::array<double, 2> action_vector(int action) const;
  int next_cell(int cell, int action) const;
  double cell_reward(int cell, int action) const;

  std::array<double, 2> initial_state(SeededRng& rng) const;

  struct Step {
    std::array<double, 2> next_state;
    double reward;
  };
  /// Continuous action interface for both kinds; gridworld actions are the move
  /// vectors returned by action_vector().
  Step step(std::span<const double> state, std::span<const double> action) const;

 private:
  int action_index(std::span<const double> action) const;

  EnvSpec spec_;
};

Environment make_env(const EnvSpec& spec);

/// Σ_i γ^i r_i over the segment's true rewards.
double true_return(const Trajectory& traj, double gamma);

/// n pairs drawn uniformly; the two members of each pair are distinct buffer entries.
/// Throws std::invalid_argument when the buffer holds fewer than two trajectories.
std::vector<TrajectoryPair> sample_pairs(std::span<const Trajectory> buffer, std::size_t n,
                                         SeededRng& rng);

}  // namespace prefnoise

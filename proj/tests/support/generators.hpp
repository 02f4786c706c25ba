#pragma once

// Seeded random generators for property tests.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/nn.hpp"
#include "prefnoise/policy.hpp"
#include "prefnoise/reward.hpp"
#include "prefnoise/rng.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise::testing {

/// Trajectory with uniform random states/actions in [-1, 1] and rewards in [-1, 1].
inline Trajectory random_trajectory(SeededRng& rng, std::uint64_t id, std::size_t h = 6) {
  Trajectory t;
  t.id = id;
  t.state_dim = 2;
  t.action_dim = 2;
  for (std::size_t i = 0; i < 2 * (h + 1); ++i) t.states.push_back(rng.uniform(-1.0, 1.0));
  for (std::size_t i = 0; i < 2 * h; ++i) t.actions.push_back(rng.uniform(-1.0, 1.0));
  for (std::size_t i = 0; i < h; ++i) t.true_rewards.push_back(rng.uniform(-1.0, 1.0));
  return t;
}

inline TrajectoryPair random_pair(SeededRng& rng, std::uint64_t id, std::size_t h = 6) {
  return make_pair(random_trajectory(rng, 2 * id + 1, h), random_trajectory(rng, 2 * id + 2, h));
}

/// Oracle-labelled batch of n random pairs (ties are measure-zero with continuous rewards).
inline std::vector<LabeledPreference> random_batch(SeededRng& rng, std::size_t n,
                                                   std::size_t h = 6) {
  std::vector<LabeledPreference> out;
  std::uint64_t id = 0;
  while (out.size() < n) {
    auto pair = random_pair(rng, id++, h);
    if (auto label = oracle_label(pair, 1.0)) out.push_back(LabeledPreference::clean(pair, *label));
  }
  return out;
}

/// Scores drawn from a small grid of values so ties are frequent.
inline std::vector<double> random_scores_with_ties(SeededRng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = static_cast<double>(rng.index(8)) * 0.25;
  return out;
}

inline std::vector<std::size_t> random_hidden(SeededRng& rng) {
  std::vector<std::size_t> hidden(1 + rng.index(2));
  for (auto& w : hidden) w = 1 + rng.index(5);
  return hidden;
}

/// Gridworld trajectories from the uniform random policy.
inline std::vector<Trajectory> gridworld_rollouts(std::size_t n, std::uint64_t seed,
                                                  int horizon = 20, int grid = 8) {
  EnvSpec spec;
  spec.grid_size = grid;
  spec.horizon = horizon;
  const Environment env(spec);
  SeededRng rng(seed);
  return collect_rollouts(env, UniformRandomPolicy{}, n, rng, 0);
}

}  // namespace prefnoise::testing

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/rng.hpp"

namespace prefnoise {

struct UniformRandomPolicy {};

/// Finite-horizon action-value table indexed by (t, cell, action). Acting is greedy,
/// ties go to the lowest action index.
struct TabularQPolicy {
  int horizon = 0;
  int cells = 0;
  int actions = 0;
  std::vector<double> q;

  TabularQPolicy() = default;
  TabularQPolicy(int horizon, int cells, int actions)
      : horizon(horizon), cells(cells), actions(actions),
        q(static_cast<std::size_t>(horizon) * cells * actions, 0.0) {}

  double& at(int t, int cell, int a) {
    return q[(static_cast<std::size_t>(t) * cells + cell) * actions + a];
  }
  double at(int t, int cell, int a) const {
    return q[(static_cast<std::size_t>(t) * cells + cell) * actions + a];
  }
  int greedy(int t, int cell) const;
  double max_value(int t, int cell) const;

  bool operator==(const TabularQPolicy&) const = default;
};

/// a ~ clip(K s + b + N(0, stddev^2 I), -1, 1) with K row-major 2x2.
struct LinearGaussianPolicy {
  std::array<double, 4> gain{};
  std::array<double, 2> bias{};
  double stddev = 0.1;

  bool operator==(const LinearGaussianPolicy&) const = default;
};

using Policy = std::variant<UniformRandomPolicy, TabularQPolicy, LinearGaussianPolicy>;

/// Action vector for `state` at step t. Throws std::invalid_argument when the policy
/// does not fit the environment's action space.
std::array<double, 2> select_action(const Policy& policy, const Environment& env,
                                    std::span<const double> state, int t, SeededRng& rng);

/// One H-step segment from the environment's start distribution.
Trajectory rollout(const Environment& env, const Policy& policy, SeededRng& rng,
                   std::uint64_t id = 0);

/// `count` rollouts with consecutive ids starting at `first_id`.
std::vector<Trajectory> collect_rollouts(const Environment& env, const Policy& policy,
                                         std::size_t count, SeededRng& rng,
                                         std::uint64_t first_id);

}  // namespace prefnoise

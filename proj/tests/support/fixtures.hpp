#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/nn.hpp"
#include "prefnoise/reward.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise::testing {

/// H-step trajectory with 2-d states and actions. Every state is (x0, 0), every action
/// (0, 0), and the hidden rewards are given explicitly.
inline Trajectory make_trajectory(std::uint64_t id, std::vector<double> rewards, double x0 = 0.0) {
  Trajectory t;
  t.id = id;
  t.state_dim = 2;
  t.action_dim = 2;
  const std::size_t h = rewards.size();
  t.states.assign(2 * (h + 1), 0.0);
  for (std::size_t i = 0; i <= h; ++i) t.states[2 * i] = x0;
  t.actions.assign(2 * h, 0.0);
  t.true_rewards = std::move(rewards);
  return t;
}

/// Trajectory whose true return is `g` spread evenly over `h` steps.
inline Trajectory trajectory_with_return(std::uint64_t id, double g, std::size_t h = 4) {
  return make_trajectory(id, std::vector<double>(h, g / static_cast<double>(h)));
}

inline TrajectoryPair pair_with_returns(double g1, double g2, std::uint64_t id = 0,
                                        std::size_t h = 4) {
  return make_pair(trajectory_with_return(2 * id + 1, g1, h),
                   trajectory_with_return(2 * id + 2, g2, h));
}

/// Reward net computing r(s, a) = tanh(s0): a single tanh layer reading the first
/// state coordinate.
inline RewardNet probe_net() {
  nn::DenseLayer layer;
  layer.weight = Eigen::MatrixXd::Zero(1, 4);
  layer.weight(0, 0) = 1.0;
  layer.bias = Eigen::VectorXd::Zero(1);
  layer.activation = nn::Activation::tanh;
  return RewardNet(2, 2, nn::Mlp({layer}));
}

/// Trajectory that probe_net() scores with predicted return `g` (|g| < h).
inline Trajectory probe_trajectory(std::uint64_t id, double g, std::size_t h = 10) {
  return make_trajectory(id, std::vector<double>(h, 0.0), std::atanh(g / static_cast<double>(h)));
}

inline RewardEnsemble probe_ensemble(std::size_t members = 3) {
  return RewardEnsemble(std::vector<RewardNet>(members, probe_net()));
}

}  // namespace prefnoise::testing

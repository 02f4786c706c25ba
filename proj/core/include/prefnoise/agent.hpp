#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "prefnoise/env.hpp"
#include "prefnoise/policy.hpp"
#include "prefnoise/reward.hpp"
#include "prefnoise/rng.hpp"

namespace prefnoise {

/// Where policy optimization reads rewards from: the environment's ground truth or a
/// learned model queried per transition.
class RewardSource {
 public:
  using Fn = std::function<double(std::span<const double>, std::span<const double>)>;

  static RewardSource truth() { return RewardSource(); }
  /// The referenced model must outlive the source.
  static RewardSource learned(const RewardNet& net);
  static RewardSource learned(const RewardEnsemble& ensemble);

  bool is_truth() const noexcept { return !fn_; }
  double operator()(std::span<const double> state, std::span<const double> action,
                    double true_reward) const {
    return fn_ ? fn_(state, action) : true_reward;
  }

 private:
  RewardSource() = default;
  explicit RewardSource(Fn fn) : fn_(std::move(fn)) {}
  Fn fn_;
};

struct AgentConfig {
  double q_learning_rate = 1.0;  // transitions are deterministic
  double exploration = 0.1;  // ε-greedy
  std::size_t cem_population = 64;
  std::size_t cem_elite = 8;
  int cem_eval_episodes = 4;
  double cem_init_std = 1.0;
  double policy_stddev = 0.1;
};

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  int episodes = 0;
};

/// Zero action-value table (gridworld) or zero linear policy (pointmass).
Policy initial_policy(const Environment& env, const AgentConfig& cfg = {});

/// Gridworld: finite-horizon tabular Q-learning with ε-greedy exploration for `steps`
/// transitions. Pointmass: cross-entropy-method search over linear policies until
/// `steps` transitions have been simulated. steps <= 0 returns initial_policy(env).
Policy train_policy(const Environment& env, const RewardSource& source, long steps,
                    SeededRng& rng, const AgentConfig& cfg = {});

/// Mean and sample standard deviation of the true discounted return over `episodes`
/// rollouts. Throws std::invalid_argument when episodes < 1.
EvalResult evaluate(const Policy& policy, const Environment& env, int episodes, SeededRng& rng);

}  // namespace prefnoise

#include "prefnoise/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace prefnoise {

int TabularQPolicy::greedy(int t, int cell) const {
  int best = 0;
  for (int a = 1; a < actions; ++a) {
    if (at(t, cell, a) > at(t, cell, best)) best = a;
  }
  return best;
}

double TabularQPolicy::max_value(int t, int cell) const { return at(t, cell, greedy(t, cell)); }

namespace {

struct ActionVisitor {
  const Environment& env;
  std::span<const double> state;
  int t;
  SeededRng& rng;

  std::array<double, 2> operator()(const UniformRandomPolicy&) const {
    if (env.kind() == EnvKind::gridworld) {
      return env.action_vector(static_cast<int>(rng.index(4)));
    }
    const double ax = rng.uniform(-1.0, 1.0);
    const double ay = rng.uniform(-1.0, 1.0);
    return {ax, ay};
  }

  std::array<double, 2> operator()(const TabularQPolicy& p) const {
    if (env.kind() != EnvKind::gridworld || p.cells != env.num_cells() ||
        p.actions != env.num_actions() || p.horizon < env.horizon()) {
      throw std::invalid_argument("tabular policy does not match the environment");
    }
    return env.action_vector(p.greedy(t, env.cell_of(state)));
  }

  std::array<double, 2> operator()(const LinearGaussianPolicy& p) const {
    if (env.kind() != EnvKind::pointmass) {
      throw std::invalid_argument("linear-Gaussian policy needs a continuous action space");
    }
    std::array<double, 2> a{};
    for (std::size_t i = 0; i < 2; ++i) {
      const double mean = p.gain[2 * i] * state[0] + p.gain[2 * i + 1] * state[1] + p.bias[i];
      a[i] = std::clamp(mean + p.stddev * rng.normal(), -1.0, 1.0);
    }
    return a;
  }
};

}  // namespace

std::array<double, 2> select_action(const Policy& policy, const Environment& env,
                                    std::span<const double> state, int t, SeededRng& rng) {
  return std::visit(ActionVisitor{env, state, t, rng}, policy);
}

Trajectory rollout(const Environment& env, const Policy& policy, SeededRng& rng,
                   std::uint64_t id) {
  const auto h = static_cast<std::size_t>(env.horizon());
  Trajectory traj;
  traj.id = id;
  traj.state_dim = env.state_dim();
  traj.action_dim = env.action_dim();
  traj.states.reserve((h + 1) * 2);
  traj.actions.reserve(h * 2);
  traj.true_rewards.reserve(h);

  std::array<double, 2> s = env.initial_state(rng);
  traj.states.insert(traj.states.end(), s.begin(), s.end());
  for (std::size_t t = 0; t < h; ++t) {
    const auto a = select_action(policy, env, s, static_cast<int>(t), rng);
    const auto step = env.step(s, a);
    traj.actions.insert(traj.actions.end(), a.begin(), a.end());
    traj.true_rewards.push_back(step.reward);
    s = step.next_state;
    traj.states.insert(traj.states.end(), s.begin(), s.end());
  }
  return traj;
}

std::vector<Trajectory> collect_rollouts(const Environment& env, const Policy& policy,
                                         std::size_t count, SeededRng& rng,
                                         std::uint64_t first_id) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(rollout(env, policy, rng, first_id + i));
  return out;
}

}  // namespace prefnoise

#include "prefnoise/agent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "prefnoise/math.hpp"

namespace prefnoise {

RewardSource RewardSource::learned(const RewardNet& net) {
  return RewardSource([&net](std::span<const double> s, std::span<const double> a) {
    return net.reward(s, a);
  });
}

RewardSource RewardSource::learned(const RewardEnsemble& ensemble) {
  return RewardSource([&ensemble](std::span<const double> s, std::span<const double> a) {
    return ensemble.reward(s, a);
  });
}

Policy initial_policy(const Environment& env, const AgentConfig& cfg) {
  if (env.kind() == EnvKind::gridworld) {
    return TabularQPolicy(env.horizon(), env.num_cells(), env.num_actions());
  }
  LinearGaussianPolicy p;
  p.stddev = cfg.policy_stddev;
  return p;
}

namespace {

// Greedy with uniformly random tie-breaking, so untouched states are explored evenly.
int explore_greedy(const TabularQPolicy& q, int t, int cell, SeededRng& rng) {
  const double best = q.max_value(t, cell);
  int ties = 0;
  int chosen = 0;
  for (int a = 0; a < q.actions; ++a) {
    if (q.at(t, cell, a) == best && rng.index(static_cast<std::size_t>(++ties)) == 0) chosen = a;
  }
  return chosen;
}

Policy q_learning(const Environment& env, const RewardSource& source, long steps, SeededRng& rng,
                  const AgentConfig& cfg) {
  const int h = env.horizon();
  const int cells = env.num_cells();
  const int actions = env.num_actions();
  const double gamma = env.spec().gamma;
  // r(cell, a) is a fixed function of the transition in a deterministic grid, so the
  // source is queried once per (cell, action).
  std::vector<double> reward(static_cast<std::size_t>(cells * actions));
  for (int c = 0; c < cells; ++c) {
    const auto s = env.state_of_cell(c);
    for (int a = 0; a < actions; ++a) {
      const auto av = env.action_vector(a);
      reward[static_cast<std::size_t>(c * actions + a)] = source(s, av, env.cell_reward(c, a));
    }
  }

  // Optimistic start: every entry begins at the largest return still reachable, so
  // greedy action selection keeps trying actions until their value is learned.
  TabularQPolicy q(h, cells, actions);
  const double r_max = *std::max_element(reward.begin(), reward.end());
  for (int t = h - 1; t >= 0; --t) {
    const double bound = r_max + (t + 1 < h ? gamma * q.at(t + 1, 0, 0) : 0.0);
    for (int c = 0; c < cells; ++c) {
      for (int a = 0; a < actions; ++a) q.at(t, c, a) = bound;
    }
  }
  struct Transition {
    int cell;
    int action;
    int next;
  };
  std::vector<Transition> episode;
  long done = 0;
  while (done < steps) {
    episode.clear();
    int cell = env.cell_of(env.initial_state(rng));
    for (int t = 0; t < h && done < steps; ++t, ++done) {
      const int a = rng.bernoulli(cfg.exploration)
                        ? static_cast<int>(rng.index(static_cast<std::size_t>(actions)))
                        : explore_greedy(q, t, cell, rng);
      const int next = env.next_cell(cell, a);
      episode.push_back({cell, a, next});
      cell = next;
    }
    // Updates run from the last step back to the first so one episode carries the
    // end-of-segment values all the way to t = 0.
    for (int t = static_cast<int>(episode.size()) - 1; t >= 0; --t) {
      const auto& tr = episode[static_cast<std::size_t>(t)];
      const double r = reward[static_cast<std::size_t>(tr.cell * actions + tr.action)];
      const double future = t + 1 < h ? gamma * q.max_value(t + 1, tr.next) : 0.0;
      double& entry = q.at(t, tr.cell, tr.action);
      entry += cfg.q_learning_rate * (r + future - entry);
    }
  }
  return q;
}

LinearGaussianPolicy from_params(const std::array<double, 6>& p, double stddev) {
  LinearGaussianPolicy out;
  std::copy(p.begin(), p.begin() + 4, out.gain.begin());
  out.bias = {p[4], p[5]};
  out.stddev = stddev;
  return out;
}

Policy cem_search(const Environment& env, const RewardSource& source, long steps, SeededRng& rng,
                  const AgentConfig& cfg) {
  constexpr std::size_t dim = 6;
  const std::size_t pop = std::max<std::size_t>(cfg.cem_population, 1);
  const std::size_t elite = std::clamp<std::size_t>(cfg.cem_elite, 1, pop);
  const int episodes = std::max(cfg.cem_eval_episodes, 1);
  const long per_iteration = static_cast<long>(pop) * episodes * env.horizon();
  const double gamma = env.spec().gamma;

  std::array<double, dim> mean{};
  std::array<double, dim> stddev;
  stddev.fill(cfg.cem_init_std);

  long done = 0;
  int iteration = 0;
  while (done < steps) {
    std::vector<std::array<double, dim>> candidates(pop);
    std::vector<double> scores(pop, 0.0);
    for (auto& c : candidates) {
      for (std::size_t i = 0; i < dim; ++i) c[i] = rng.normal(mean[i], stddev[i]);
    }
    // Common random numbers: every candidate sees the same start states and noise.
    const SeededRng episode_root = rng.split(static_cast<std::uint64_t>(iteration));
    for (std::size_t k = 0; k < pop; ++k) {
      const Policy policy = from_params(candidates[k], cfg.policy_stddev);
      double total = 0.0;
      for (int e = 0; e < episodes; ++e) {
        SeededRng ep = episode_root.split(static_cast<std::uint64_t>(e));
        std::array<double, 2> s = env.initial_state(ep);
        double discount = 1.0;
        for (int t = 0; t < env.horizon(); ++t) {
          const auto a = select_action(policy, env, s, t, ep);
          const auto step = env.step(s, a);
          total += discount * source(s, a, step.reward);
          discount *= gamma;
          s = step.next_state;
        }
      }
      scores[k] = total / episodes;
    }
    done += per_iteration;
    ++iteration;

    std::vector<double> negated(scores.size());
    std::transform(scores.begin(), scores.end(), negated.begin(), [](double v) { return -v; });
    const auto order = argsort_stable(negated);
    for (std::size_t i = 0; i < dim; ++i) {
      double m = 0.0;
      for (std::size_t j = 0; j < elite; ++j) m += candidates[order[j]][i];
      m /= static_cast<double>(elite);
      double v = 0.0;
      for (std::size_t j = 0; j < elite; ++j) {
        v += (candidates[order[j]][i] - m) * (candidates[order[j]][i] - m);
      }
      mean[i] = m;
      stddev[i] = std::sqrt(v / static_cast<double>(elite)) + 0.01;
    }
  }
  return from_params(mean, cfg.policy_stddev);
}

}  // namespace

Policy train_policy(const Environment& env, const RewardSource& source, long steps,
                    SeededRng& rng, const AgentConfig& cfg) {
  if (steps <= 0) return initial_policy(env, cfg);
  if (env.kind() == EnvKind::gridworld) return q_learning(env, source, steps, rng, cfg);
  return cem_search(env, source, steps, rng, cfg);
}

EvalResult evaluate(const Policy& policy, const Environment& env, int episodes, SeededRng& rng) {
  if (episodes < 1) throw std::invalid_argument("evaluate needs at least one episode");
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    returns.push_back(true_return(rollout(env, policy, rng), env.spec().gamma));
  }
  const auto stats = mean_std(returns);
  return {stats.mean, stats.std, episodes};
}

}  // namespace prefnoise

#include <benchmark/benchmark.h>

#include "prefnoise/agent.hpp"
#include "prefnoise/env.hpp"
#include "prefnoise/policy.hpp"
#include "prefnoise/reward.hpp"
#include "prefnoise/teacher.hpp"

namespace {

using namespace prefnoise;

void BM_TrainUpdateEpoch(benchmark::State& state) {
  const Environment env = make_env(EnvSpec{});
  SeededRng rng(1);
  const auto trajs = collect_rollouts(env, UniformRandomPolicy{}, 400, rng, 0);
  const auto batch = label_with_oracle(sample_pairs(trajs, 2000, rng), 1.0);
  TrainConfig cfg;
  cfg.ensemble_size = 1;
  cfg.epochs_per_update = 1;
  RewardEnsemble ensemble(env.state_dim(), env.action_dim(), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(train_update(ensemble, batch, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainUpdateEpoch)->Unit(benchmark::kMillisecond);

void BM_PredictedReturn(benchmark::State& state) {
  const Environment env = make_env(EnvSpec{});
  SeededRng rng(2);
  const auto trajs = collect_rollouts(env, UniformRandomPolicy{}, 64, rng, 0);
  TrainConfig cfg;
  const RewardEnsemble ensemble(env.state_dim(), env.action_dim(), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(ensemble.member_returns(trajs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trajs.size()));
}
BENCHMARK(BM_PredictedReturn);

void BM_QLearning(benchmark::State& state) {
  const Environment env = make_env(EnvSpec{});
  for (auto _ : state) {
    SeededRng rng(3);
    benchmark::DoNotOptimize(train_policy(env, RewardSource::truth(), state.range(0), rng, AgentConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QLearning)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

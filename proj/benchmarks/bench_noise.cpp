#include <benchmark/benchmark.h>

#include "prefnoise/env.hpp"
#include "prefnoise/noise.hpp"
#include "prefnoise/policy.hpp"
#include "prefnoise/teacher.hpp"

namespace {

using namespace prefnoise;

std::vector<LabeledPreference> batch_of(std::size_t n) {
  const Environment env = make_env(EnvSpec{});
  SeededRng rng(1);
  const auto trajs = collect_rollouts(env, UniformRandomPolicy{}, 400, rng, 0);
  std::vector<LabeledPreference> out;
  while (out.size() < n) {
    for (auto& s : label_with_oracle(sample_pairs(trajs, n, rng), 1.0)) {
      if (out.size() < n) out.push_back(std::move(s));
    }
  }
  return out;
}

void BM_ApplyUniform(benchmark::State& state) {
  const auto batch = batch_of(static_cast<std::size_t>(state.range(0)));
  NoiseModelSpec spec;
  spec.target_rate = 0.3;
  SeededRng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(apply_noise(batch, spec, nullptr, nullptr, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApplyUniform)->Arg(64)->Arg(1024);

void BM_ApplyAdversarial(benchmark::State& state) {
  const auto batch = batch_of(static_cast<std::size_t>(state.range(0)));
  TrainConfig cfg;
  const RewardEnsemble ensemble(2, 2, cfg);
  NoiseModelSpec spec;
  spec.kind = NoiseKind::adversarial;
  spec.target_rate = 0.3;
  SeededRng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(apply_noise(batch, spec, &ensemble, nullptr, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApplyAdversarial)->Arg(64)->Arg(1024);

void BM_CalibrateThreshold(benchmark::State& state) {
  SeededRng rng(4);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (auto& s : scores) s = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(calibrate_threshold(scores, 0.3, FlipDirection::flip_below));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CalibrateThreshold)->Arg(1024)->Arg(1 << 16);

}  // namespace

#include "prefnoise/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "prefnoise/agent.hpp"
#include "prefnoise/errors.hpp"
#include "prefnoise/math.hpp"
#include "prefnoise/policy.hpp"

namespace prefnoise {

std::string format_record(const ExperimentRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                static_cast<unsigned long long>(r.seed), r.round, r.noise_kind.c_str(),
                r.target_rate, r.realized_rate, r.denoiser_precision, r.denoiser_recall,
                r.reward_label_accuracy, r.mean_return, r.std_return);
  return buf;
}

std::string format_aggregate(const AggregateRow& a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", a.noise_kind.c_str(),
                a.target_rate, a.seeds, a.mean_final_return, a.std_final_return,
                a.mean_realized_rate, a.mean_label_accuracy, a.mean_denoiser_precision,
                a.mean_denoiser_recall);
  return buf;
}

std::string aggregate_path(const std::string& output_path) {
  const auto slash = output_path.find_last_of('/');
  const auto dot = output_path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return output_path + ".aggregate.csv";
  }
  return output_path.substr(0, dot) + ".aggregate" + output_path.substr(dot);
}

namespace {

constexpr std::uint64_t kHeldoutIdBase = std::uint64_t{1} << 40;

enum Stream : std::uint64_t {
  kCollect = 1,
  kPairs = 2,
  kNoise = 3,
  kAgent = 4,
  kEval = 5,
  kHeldout = 6,
};

/// Oracle-labelled, tie-free pairs drawn from `buffer`, at most `count` of them.
std::vector<LabeledPreference> labelled_pairs(std::span<const Trajectory> buffer, std::size_t count,
                                              double gamma, double tie_band, SeededRng& rng) {
  std::vector<LabeledPreference> out;
  for (int attempt = 0; attempt < 20 && out.size() < count; ++attempt) {
    const std::size_t want = 2 * (count - out.size());
    const auto pairs = sample_pairs(buffer, want, rng);
    for (auto& sample : label_with_oracle(pairs, gamma, tie_band)) {
      if (out.size() == count) break;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

double trust_all_recall(std::span<const LabeledPreference> batch) {
  const bool any_noisy =
      std::any_of(batch.begin(), batch.end(), [](const auto& s) { return s.flipped; });
  return any_noisy ? 0.0 : 1.0;
}

void require_finite(double value, const char* what, std::uint64_t seed, int round) {
  if (!std::isfinite(value)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "seed %llu round %d: %s is not finite (%g)",
                  static_cast<unsigned long long>(seed), round, what, value);
    throw NumericError(buf);
  }
}

NoiseModelSpec resolved_noise(const ExperimentConfig& cfg) {
  NoiseModelSpec spec = cfg.noise;
  if (spec.kind == NoiseKind::magnitude && spec.feature_subset.empty()) {
    spec.feature_subset = default_magnitude_subset(cfg.env.kind);
  }
  if (spec.component && spec.component->kind == NoiseKind::magnitude &&
      spec.component->feature_subset.empty()) {
    auto component = *spec.component;
    component.feature_subset = default_magnitude_subset(cfg.env.kind);
    spec.component = std::make_shared<const NoiseModelSpec>(std::move(component));
  }
  return spec;
}

}  // namespace

std::vector<ExperimentRecord> run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                       Transport* transport) {
  EnvSpec env_spec = cfg.env;
  env_spec.seed = seed;
  const Environment env = make_env(env_spec);
  const ProtocolConfig& proto = cfg.protocol;
  const NoiseModelSpec noise = resolved_noise(cfg);
  const double gamma = env_spec.gamma;

  SeededRng root(seed);
  SeededRng collect_rng = root.split(kCollect);
  SeededRng pair_rng = root.split(kPairs);
  SeededRng noise_rng = root.split(kNoise);
  SeededRng agent_rng = root.split(kAgent);
  SeededRng eval_rng = root.split(kEval);
  SeededRng heldout_rng = root.split(kHeldout);

  std::uint64_t next_id = 0;
  std::vector<Trajectory> buffer =
      collect_rollouts(env, UniformRandomPolicy{}, proto.initial_rollouts, collect_rng, next_id);
  next_id += proto.initial_rollouts;

  const auto heldout_trajs = collect_rollouts(env, UniformRandomPolicy{},
                                              std::max<std::size_t>(2 * proto.heldout_pairs, 50),
                                              heldout_rng, kHeldoutIdBase);
  const auto heldout =
      labelled_pairs(heldout_trajs, proto.heldout_pairs, gamma, proto.tie_band, heldout_rng);

  std::optional<Encoder> encoder;
  if (cfg.teacher == TeacherKind::scripted && noise.needs_encoder()) {
    EncoderConfig enc = cfg.encoder;
    enc.input_dim = static_cast<std::size_t>(env.horizon()) * env.step_dim();
    enc.seed = seed;
    encoder = train_encoder(buffer, enc);
  }

  TrainConfig train = cfg.train;
  train.seed = seed;
  RewardEnsemble ensemble(env.state_dim(), env.action_dim(), train);

  std::unique_ptr<HttpTransport> owned_transport;
  std::unique_ptr<VerdictCache> cache;
  if (cfg.teacher == TeacherKind::remote) {
    if (transport == nullptr) {
      owned_transport = std::make_unique<HttpTransport>();
      transport = owned_transport.get();
    }
    cache = cfg.remote->cache_path.empty() ? std::make_unique<VerdictCache>()
                                           : std::make_unique<VerdictCache>(cfg.remote->cache_path);
  }

  Policy policy = UniformRandomPolicy{};
  std::vector<LabeledPreference> dataset;
  std::optional<double> global_threshold;
  std::vector<ExperimentRecord> records;

  for (int round = 0; round < proto.rounds; ++round) {
    if (round > 0 && proto.rollouts_per_round > 0) {
      const std::size_t random_count = proto.rollouts_per_round / 2;
      const std::size_t policy_count = proto.rollouts_per_round - random_count;
      auto fresh = collect_rollouts(env, UniformRandomPolicy{}, random_count, collect_rng, next_id);
      next_id += random_count;
      auto on_policy = collect_rollouts(env, policy, policy_count, collect_rng, next_id);
      next_id += policy_count;
      buffer.insert(buffer.end(), fresh.begin(), fresh.end());
      buffer.insert(buffer.end(), on_policy.begin(), on_policy.end());
    }

    const auto clean =
        labelled_pairs(buffer, proto.queries_per_round, gamma, proto.tie_band, pair_rng);

    std::vector<LabeledPreference> noisy;
    double realized = 0.0;
    if (cfg.teacher == TeacherKind::remote) {
      std::vector<TrajectoryPair> pairs;
      std::vector<PreferenceLabel> oracle;
      for (const auto& s : clean) {
        pairs.push_back(s.pair);
        oracle.push_back(s.ground_truth);
      }
      const auto verdicts = query_batch(*cfg.remote, env, pairs, *transport, cache.get());
      realized = measure_noise(verdicts, oracle);
      noisy = remote_labels(pairs, verdicts, gamma);
    } else {
      const bool reuse = proto.threshold_scope == ThresholdScope::global && global_threshold;
      auto outcome = apply_noise(clean, noise, &ensemble, encoder ? &*encoder : nullptr, noise_rng,
                                 reuse ? global_threshold : std::nullopt);
      if (proto.threshold_scope == ThresholdScope::global && !global_threshold &&
          outcome.threshold && std::isfinite(*outcome.threshold)) {
        global_threshold = outcome.threshold;
      }
      realized = outcome.realized_rate;
      noisy = std::move(outcome.labels);
    }

    double precision = 1.0;
    double recall = trust_all_recall(noisy);
    if (cfg.denoiser && round >= proto.denoise_warmup_rounds && !noisy.empty()) {
      const auto report = partition(noisy, ensemble, *cfg.denoiser, round);
      precision = report.precision;
      recall = report.recall;
      const auto kept = apply_corrections(noisy, report);
      dataset.insert(dataset.end(), kept.begin(), kept.end());
    } else {
      dataset.insert(dataset.end(), noisy.begin(), noisy.end());
    }

    if (!dataset.empty()) train_update(ensemble, dataset, train);

    ExperimentRecord rec;
    rec.seed = seed;
    rec.round = round;
    rec.noise_kind = cfg.teacher == TeacherKind::remote ? "remote" : noise.label();
    rec.target_rate = noise.target_rate;
    rec.realized_rate = realized;
    rec.denoiser_precision = precision;
    rec.denoiser_recall = recall;
    rec.reward_label_accuracy = label_accuracy(ensemble, heldout);

    policy = train_policy(env, RewardSource::learned(ensemble), proto.policy_steps, agent_rng,
                          cfg.agent);
    const EvalResult eval = evaluate(policy, env, proto.eval_episodes, eval_rng);
    rec.mean_return = eval.mean_return;
    rec.std_return = eval.std_return;

    require_finite(rec.realized_rate, "realized_rate", seed, round);
    require_finite(rec.reward_label_accuracy, "reward_label_accuracy", seed, round);
    require_finite(rec.mean_return, "mean_return", seed, round);
    require_finite(rec.std_return, "std_return", seed, round);
    records.push_back(std::move(rec));
  }
  return records;
}

namespace {

class CsvSink {
 public:
  CsvSink(std::string path, const char* header, bool truncate) : path_(std::move(path)) {
    out_.open(path_, truncate ? std::ios::trunc : std::ios::app);
    if (!out_) throw std::runtime_error("cannot open " + path_ + " for writing");
    if (truncate) write_line(header);
  }

  void write_line(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
    if (!out_) {
      throw std::runtime_error("write to " + path_ + " failed; " + std::to_string(rows_) +
                               " rows were written before the failure");
    }
    ++rows_;
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg,
                                             const RunOptions& options) {
  cfg.validate();
  const auto& seeds = cfg.protocol.seeds;
  std::unique_ptr<CsvSink> sink;
  if (options.write_csv) sink = std::make_unique<CsvSink>(cfg.output_path, kRecordHeader, true);

  std::vector<std::optional<std::vector<ExperimentRecord>>> results(seeds.size());
  std::size_t next_to_write = 0;
  std::mutex mutex;
  std::exception_ptr failure;
  std::size_t next_seed = 0;

  auto flush_ready = [&] {
    while (next_to_write < seeds.size() && results[next_to_write]) {
      if (sink) {
        for (const auto& r : *results[next_to_write]) sink->write_line(format_record(r));
      }
      ++next_to_write;
    }
  };

  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        std::lock_guard lock(mutex);
        if (failure || next_seed >= seeds.size()) return;
        i = next_seed++;
      }
      try {
        auto recs = run_seed(cfg, seeds[i], options.transport);
        std::lock_guard lock(mutex);
        results[i] = std::move(recs);
        flush_ready();
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, seeds.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ExperimentRecord> all;
  for (auto& r : results) all.insert(all.end(), r->begin(), r->end());
  return all;
}

std::vector<AggregateRow> aggregate(std::span<const ExperimentRecord> records) {
  struct Cell {
    std::string kind;
    double rate;
    std::map<std::uint64_t, const ExperimentRecord*> final_by_seed;
  };
  std::vector<Cell> cells;
  for (const auto& r : records) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) {
      return c.kind == r.noise_kind && c.rate == r.target_rate;
    });
    if (it == cells.end()) {
      cells.push_back({r.noise_kind, r.target_rate, {}});
      it = std::prev(cells.end());
    }
    auto& slot = it->final_by_seed[r.seed];
    if (slot == nullptr || r.round > slot->round) slot = &r;
  }

  std::vector<AggregateRow> out;
  for (const auto& c : cells) {
    std::vector<double> returns;
    double realized = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    for (const auto& [seed, r] : c.final_by_seed) {
      returns.push_back(r->mean_return);
      realized += r->realized_rate;
      accuracy += r->reward_label_accuracy;
      precision += r->denoiser_precision;
      recall += r->denoiser_recall;
    }
    const double n = static_cast<double>(returns.size());
    const MeanStd ms = mean_std(returns);
    out.push_back({c.kind, c.rate, returns.size(), ms.mean, ms.std, realized / n, accuracy / n,
                   precision / n, recall / n});
  }
  return out;
}

SweepResult sweep(const ExperimentConfig& base, std::span<const NoiseModelSpec> kinds,
                  std::span<const double> rates, const RunOptions& options) {
  if (kinds.empty()) throw ConfigError("sweep needs at least one noise kind");
  if (rates.empty()) throw ConfigError("sweep needs at least one noise rate");

  std::unique_ptr<CsvSink> runs_sink;
  std::unique_ptr<CsvSink> agg_sink;
  if (options.write_csv) {
    runs_sink = std::make_unique<CsvSink>(base.output_path, kRecordHeader, true);
    agg_sink = std::make_unique<CsvSink>(aggregate_path(base.output_path), kAggregateHeader, true);
  }
  RunOptions cell_options = options;
  cell_options.write_csv = false;

  SweepResult result;
  for (const auto& kind : kinds) {
    for (double rate : rates) {
      ExperimentConfig cfg = base;
      cfg.noise = kind;
      cfg.noise.target_rate = rate;
      if (cfg.noise.component) {
        auto component = *cfg.noise.component;
        component.target_rate = rate;
        cfg.noise.component = std::make_shared<const NoiseModelSpec>(std::move(component));
      }
      auto runs = run_experiment(cfg, cell_options);
      const auto cell = aggregate(runs);
      if (runs_sink) {
        for (const auto& r : runs) runs_sink->write_line(format_record(r));
        for (const auto& a : cell) agg_sink->write_line(format_aggregate(a));
      }
      result.runs.insert(result.runs.end(), runs.begin(), runs.end());
      result.cells.insert(result.cells.end(), cell.begin(), cell.end());
    }
  }
  return result;
}

}  // namespace prefnoise

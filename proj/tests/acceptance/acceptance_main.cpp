// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "prefnoise/agent.hpp"
#include "prefnoise/config.hpp"
#include "prefnoise/denoise.hpp"
#include "prefnoise/harness.hpp"
#include "prefnoise/latent.hpp"
#include "prefnoise/math.hpp"
#include "prefnoise/noise.hpp"
#include "prefnoise/remote_teacher.hpp"

namespace pn = prefnoise;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

pn::Environment gridworld8() {
  pn::EnvSpec spec;
  return pn::make_env(spec);
}

std::vector<pn::LabeledPreference> gridworld_batch(std::size_t n, std::uint64_t seed,
                                                   std::vector<pn::Trajectory>* rollouts = nullptr) {
  const auto trajs = pn::testing::gridworld_rollouts(std::max<std::size_t>(n, 500), seed);
  pn::SeededRng rng(seed ^ 0x5eedULL);
  std::vector<pn::LabeledPreference> out;
  while (out.size() < n) {
    for (auto& s : pn::label_with_oracle(pn::sample_pairs(trajs, n, rng), 1.0)) {
      if (out.size() < n) out.push_back(std::move(s));
    }
  }
  if (rollouts != nullptr) *rollouts = trajs;
  return out;
}

pn::Encoder gridworld_encoder(const std::vector<pn::Trajectory>& trajs) {
  pn::EncoderConfig cfg;
  cfg.input_dim = 20 * 4;
  return pn::train_encoder(std::span(trajs).first(std::min<std::size_t>(trajs.size(), 500)), cfg);
}

std::vector<std::size_t> flipped(const pn::NoiseOutcome& o) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < o.labels.size(); ++i) {
    if (o.labels[i].flipped) out.push_back(i);
  }
  return out;
}

std::vector<double> raw_scores(const std::vector<pn::NoiseScore>& s) {
  std::vector<double> out;
  for (const auto& x : s) out.push_back(x.score);
  return out;
}

// ---------------------------------------------------------------------------

Outcome noise_rate_calibration() {
  const std::size_t n = 10000;
  std::vector<pn::Trajectory> trajs;
  const auto batch = gridworld_batch(n, 101, &trajs);
  const auto encoder = gridworld_encoder(trajs);
  pn::TrainConfig tcfg;
  tcfg.seed = 101;
  const pn::RewardEnsemble ensemble(2, 2, tcfg);

  bool ok = true;
  double worst_bernoulli = 0.0;
  int exact_cells = 0, bernoulli_cells = 0;
  std::string failures;
  const std::vector<std::pair<std::size_t, double>> rates{{1, 0.1}, {2, 0.2}, {3, 0.3}, {4, 0.4}};
  std::uint64_t stream = 0;
  for (const auto& [tenths, rate] : rates) {
    for (const auto& spec : pn::standard_noise_suite(rate, pn::default_magnitude_subset(pn::EnvKind::gridworld))) {
      pn::SeededRng rng(1000 + stream++);
      const auto out = pn::apply_noise(batch, spec, &ensemble, &encoder, rng);
      if (spec.threshold_based()) {
        ++exact_cells;
        const double expected =
            static_cast<double>(pn::testing::exact_floor_count(tenths, 10, n)) / static_cast<double>(n);
        if (out.realized_rate != expected) {
          ok = false;
          failures += fmt(" %s@%.1f=%.4f", spec.label().c_str(), rate, out.realized_rate);
        }
      } else {
        ++bernoulli_cells;
        const double dev = std::abs(out.realized_rate - rate);
        worst_bernoulli = std::max(worst_bernoulli, dev);
        if (dev > 0.01) {
          ok = false;
          failures += fmt(" %s@%.1f=%.4f", spec.label().c_str(), rate, out.realized_rate);
        }
      }
    }
  }
  return {ok, fmt("%d threshold cells exact, %d Bernoulli cells max |dev| %.4f over %zu pairs%s",
                  exact_cells, bernoulli_cells, worst_bernoulli, n, failures.c_str())};
}

// ---------------------------------------------------------------------------

Outcome equation_fidelity() {
  using pn::testing::make_trajectory;
  auto pair_with_norms = [](double a, double b) {
    return pn::make_pair(make_trajectory(1, std::vector<double>(5, 0.0), a),
                         make_trajectory(2, std::vector<double>(5, 0.0), b));
  };
  const std::vector<std::size_t> subset{0};
  struct Case {
    double a, b, expected;
  };
  // σ(log 3) = 1 / (1 + 1/3) = 3/4 and σ(-log 3) = 1/4.
  const std::vector<Case> cases{{2.0, 2.0, 0.5}, {3.0, 1.0, 0.75}, {1.0, 3.0, 0.25}};
  double worst = 0.0;
  for (const auto& c : cases) {
    worst = std::max(worst, std::abs(pn::magnitude_flip_prob(pair_with_norms(c.a, c.b), 1.0, subset) - c.expected));
  }
  bool ok = worst < 1e-6;

  pn::SeededRng rng(202);
  double affine_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(64);
    std::vector<double> f(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = rng.uniform();
      u[i] = rng.uniform();
    }
    for (double alpha : {0.0, 0.5, 1.0}) {
      const auto h = pn::hybrid_scores(alpha, f, u);
      for (std::size_t i = 0; i < n; ++i) {
        affine_err = std::max(affine_err, std::abs(h[i].score - (alpha * f[i] + (1 - alpha) * u[i])));
      }
      if (alpha == 0.0 && raw_scores(h) != u) ok = false;
      if (alpha == 1.0 && raw_scores(h) != f) ok = false;
    }
  }
  ok = ok && affine_err == 0.0;

  std::vector<pn::Trajectory> trajs;
  const auto batch = gridworld_batch(400, 203, &trajs);
  const auto encoder = gridworld_encoder(trajs);
  pn::TrainConfig tcfg;
  tcfg.seed = 203;
  const pn::RewardEnsemble ensemble(2, 2, tcfg);
  int endpoint_checks = 0, endpoint_mismatch = 0;
  for (const auto& base : pn::standard_noise_suite(0.3, {0, 1})) {
    if (base.kind != pn::NoiseKind::hybrid) continue;
    pn::NoiseModelSpec spec = base;
    pn::SeededRng r(0);
    spec.alpha = 0.0;
    const auto at_zero = flipped(pn::apply_noise(batch, spec, &ensemble, &encoder, r));
    const auto unc = pn::calibrate_threshold(raw_scores(pn::uncertainty_scores(batch, ensemble)),
                                             0.3, pn::FlipDirection::flip_below);
    spec.alpha = 1.0;
    const auto at_one = flipped(pn::apply_noise(batch, spec, &ensemble, &encoder, r));
    const auto feat = pn::calibrate_threshold(pn::feature_scores(batch, *spec.component, &encoder),
                                              0.3, pn::FlipDirection::flip_below);
    endpoint_checks += 2;
    endpoint_mismatch += (at_zero != unc.flip_set) + (at_one != feat.flip_set);
  }
  ok = ok && endpoint_mismatch == 0;
  return {ok, fmt("magnitude max |err| %.2e; hybrid affine max |err| %.1e; %d/%d endpoint flip sets equal",
                  worst, affine_err, endpoint_checks - endpoint_mismatch, endpoint_checks)};
}

// ---------------------------------------------------------------------------

Outcome brute_force_selection() {
  int mismatches = 0, checks = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    pn::SeededRng rng(300 + seed);
    const std::size_t n = 1 + rng.index(64);
    const std::size_t tenths = rng.index(11);
    const double eps = static_cast<double>(tenths) / 10.0;
    const auto batch = gridworld_batch(n, 3000 + seed);
    pn::TrainConfig tcfg;
    tcfg.seed = seed;
    tcfg.hidden = {16, 16};
    tcfg.ensemble_size = 1 + rng.index(4);
    const pn::RewardEnsemble ens(2, 2, tcfg);

    // Scores recomputed from per-member returns.
    std::vector<double> unc(n), adv(n);
    for (std::size_t i = 0; i < n; ++i) {
      double diff = 0.0, g1 = 0.0, g2 = 0.0;
      for (const auto& m : ens.members()) {
        const double a = pn::predicted_return(m, batch[i].pair.first);
        const double b = pn::predicted_return(m, batch[i].pair.second);
        diff += std::abs(a - b);
        g1 += a;
        g2 += b;
      }
      const double k = static_cast<double>(ens.size());
      unc[i] = diff / k;
      const double p_first = 1.0 / (1.0 + std::exp(-(g1 / k - g2 / k)));
      const double w = batch[i].ground_truth == pn::PreferenceLabel::first ? 1e-6 : 1.0 - 1e-6;
      adv[i] = w * std::log(w / p_first) + (1 - w) * std::log((1 - w) / (1 - p_first));
    }
    const std::size_t k = pn::testing::exact_floor_count(tenths, 10, n);
    pn::NoiseModelSpec spec;
    spec.target_rate = eps;
    pn::SeededRng r(seed);
    spec.kind = pn::NoiseKind::uncertainty;
    const auto got_u = flipped(pn::apply_noise(batch, spec, &ens, nullptr, r));
    spec.kind = pn::NoiseKind::adversarial;
    const auto got_a = flipped(pn::apply_noise(batch, spec, &ens, nullptr, r));
    checks += 2;
    mismatches += got_u != pn::testing::brute_force_lowest(unc, k);
    mismatches += got_a != pn::testing::brute_force_lowest(adv, k);
  }
  return {mismatches == 0, fmt("%d/%d flip sets equal the exhaustive-sort selection (100 seeds, n <= 64)",
                               checks - mismatches, checks)};
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  pn::SeededRng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    pn::RewardNet net(2, 2, pn::testing::random_hidden(rng), rng);
    const auto batch = pn::testing::random_batch(rng, 1 + rng.index(8), 1 + rng.index(4));
    auto grads = net.mlp().zero_gradients();
    pn::ce_loss_and_gradient(net, batch, grads);
    const auto analytic = pn::nn::flatten(grads);
    const auto numeric = pn::testing::central_differences(
        [&](const std::vector<double>& theta) {
          pn::RewardNet probe = net;
          probe.mlp().set_flat_parameters(theta);
          return pn::ce_loss(probe, batch);
        },
        net.mlp().flat_parameters(), 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 50 random nets (h = 1e-5)", worst)};
}

// ---------------------------------------------------------------------------

pn::ExperimentConfig gridworld_protocol(const std::string& output) {
  pn::ExperimentConfig cfg;
  cfg.noise.kind = pn::NoiseKind::uniform;
  cfg.noise.target_rate = 0.0;
  cfg.train.epochs_per_update = 50;
  cfg.protocol.queries_per_round = 50;
  cfg.protocol.rounds = 4;
  cfg.protocol.seeds = {0, 1, 2, 3, 4};
  cfg.protocol.policy_steps = 50000;
  cfg.protocol.eval_episodes = 200;
  cfg.protocol.heldout_pairs = 500;
  cfg.output_path = output;
  return cfg;
}

std::map<std::uint64_t, pn::ExperimentRecord> final_rounds(const std::vector<pn::ExperimentRecord>& recs) {
  std::map<std::uint64_t, pn::ExperimentRecord> out;
  for (const auto& r : recs) {
    if (!out.count(r.seed) || out[r.seed].round < r.round) out[r.seed] = r;
  }
  return out;
}

struct Shared {
  fs::path dir;
  std::vector<pn::ExperimentRecord> clean;  // ε = 0 run, reused by the degradation check
  double clean_seconds = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome clean_label_recovery(Shared& shared) {
  auto cfg = gridworld_protocol((shared.dir / "clean.csv").string());
  pn::RunOptions opts;
  opts.write_csv = false;
  const auto start = std::chrono::steady_clock::now();
  shared.clean = pn::run_experiment(cfg, opts);
  shared.clean_seconds = seconds_since(start);
  const auto finals = final_rounds(shared.clean);
  const auto env = gridworld8();
  bool ok = true;
  double min_acc = 1.0, min_ratio = 1e9;
  std::string per_seed;
  for (const auto& [seed, rec] : finals) {
    // Same training budget and evaluation protocol, rewarded by the environment.
    pn::SeededRng agent_rng(pn::SeededRng(seed).split(4).seed());
    pn::SeededRng eval_rng(pn::SeededRng(seed).split(5).seed());
    const auto policy = pn::train_policy(env, pn::RewardSource::truth(), cfg.protocol.policy_steps,
                                         agent_rng, cfg.agent);
    const double truth = pn::evaluate(policy, env, cfg.protocol.eval_episodes, eval_rng).mean_return;
    const double ratio = rec.mean_return / truth;
    min_acc = std::min(min_acc, rec.reward_label_accuracy);
    min_ratio = std::min(min_ratio, ratio);
    ok = ok && rec.reward_label_accuracy >= 0.9 && ratio >= 0.9;
    per_seed += fmt(" [seed %llu acc %.3f return %.2f/%.2f]", static_cast<unsigned long long>(seed),
                    rec.reward_label_accuracy, rec.mean_return, truth);
  }
  return {ok, fmt("min held-out accuracy %.3f, min return ratio %.3f over %zu seeds;%s", min_acc,
                  min_ratio, finals.size(), per_seed.c_str())};
}

Outcome degradation_monotonicity(Shared& shared) {
  if (shared.clean.empty()) {
    auto cfg = gridworld_protocol("unused.csv");
    pn::RunOptions opts;
    opts.write_csv = false;
    const auto start = std::chrono::steady_clock::now();
    shared.clean = pn::run_experiment(cfg, opts);
    shared.clean_seconds = seconds_since(start);
  }
  struct Cell {
    double rate;
    pn::MeanStd stats;
    double stderr_;
  };
  std::vector<Cell> cells;
  auto summarize = [&](double rate, const std::vector<pn::ExperimentRecord>& recs) {
    std::vector<double> finals;
    for (const auto& [seed, r] : final_rounds(recs)) finals.push_back(r.mean_return);
    const auto ms = pn::mean_std(finals);
    cells.push_back({rate, ms, ms.std / std::sqrt(static_cast<double>(ms.n))});
  };
  summarize(0.0, shared.clean);
  for (double rate : {0.2, 0.4}) {
    auto cfg = gridworld_protocol("unused.csv");
    cfg.noise.target_rate = rate;
    pn::RunOptions opts;
    opts.write_csv = false;
    summarize(rate, pn::run_experiment(cfg, opts));
  }
  bool ok = true;
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    ok = ok && cells[i].stats.mean - cells[i].stderr_ > cells[i + 1].stats.mean + cells[i + 1].stderr_;
  }
  std::string detail;
  for (const auto& c : cells) {
    detail += fmt("eps %.1f: %.3f +/- %.3f (se);  ", c.rate, c.stats.mean, c.stderr_);
  }
  return {ok, detail + "mean +/- stderr intervals must be strictly ordered"};
}

// ---------------------------------------------------------------------------

Outcome fdn_harder_to_filter() {
  double total_diff = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto train = gridworld_batch(200, 700 + seed);
    pn::TrainConfig tcfg;
    tcfg.seed = seed;
    tcfg.epochs_per_update = 50;
    pn::RewardEnsemble ens(2, 2, tcfg);
    pn::train_update(ens, train, tcfg);

    const auto batch = gridworld_batch(500, 800 + seed);
    pn::DenoiserConfig dcfg;  // constant threshold 1.0
    auto recall_for = [&](pn::NoiseKind kind) {
      pn::NoiseModelSpec spec;
      spec.kind = kind;
      spec.target_rate = 0.3;
      pn::SeededRng rng(900 + seed);
      const auto noisy = pn::apply_noise(batch, spec, &ens, nullptr, rng);
      return pn::partition(noisy.labels, ens, dcfg, 0).recall;
    };
    const double uniform = recall_for(pn::NoiseKind::uniform);
    const double adversarial = recall_for(pn::NoiseKind::adversarial);
    total_diff += uniform - adversarial;
    per_seed += fmt(" [seed %llu %.3f vs %.3f]", static_cast<unsigned long long>(seed), uniform, adversarial);
  }
  const double mean_diff = total_diff / 5.0;
  return {mean_diff > 0.0, fmt("mean recall(uniform) - recall(adversarial) = %.3f;%s", mean_diff,
                               per_seed.c_str())};
}

// ---------------------------------------------------------------------------

Outcome symmetry_suite() {
  std::vector<pn::Trajectory> trajs;
  const auto batch = gridworld_batch(500, 1001, &trajs);
  const auto encoder = gridworld_encoder(trajs);
  pn::TrainConfig tcfg;
  tcfg.seed = 1001;
  pn::RewardEnsemble ens(2, 2, tcfg);
  pn::train_update(ens, std::span(batch).first(100), tcfg);

  std::vector<pn::TrajectoryPair> pairs, swapped;
  for (const auto& s : batch) {
    pairs.push_back(s.pair);
    swapped.push_back(s.pair.swapped());
  }
  // Pointmass pairs exercise the continuous features as well.
  pn::EnvSpec pm;
  pm.kind = pn::EnvKind::pointmass;
  const auto pm_env = pn::make_env(pm);
  pn::SeededRng rng(1002);
  const auto pm_trajs = pn::collect_rollouts(pm_env, pn::UniformRandomPolicy{}, 200, rng, 0);

  int asym = 0;
  double worst_mag = 0.0;
  const std::vector<std::size_t> all{0, 1, 2, 3};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto& q = swapped[i];
    asym += pn::similarity_flip_prob(p, pn::SimilarityMetric::l2) !=
            pn::similarity_flip_prob(q, pn::SimilarityMetric::l2);
    asym += pn::similarity_flip_prob(p, pn::SimilarityMetric::latent, &encoder) !=
            pn::similarity_flip_prob(q, pn::SimilarityMetric::latent, &encoder);
    asym += pn::ensemble_uncertainty(ens, p) != pn::ensemble_uncertainty(ens, q);
    worst_mag = std::max(worst_mag, std::abs(pn::magnitude_flip_prob(p, 1.0, all) +
                                             pn::magnitude_flip_prob(q, 1.0, all) - 1.0));
  }
  const auto u1 = raw_scores(pn::uncertainty_scores(std::span<const pn::TrajectoryPair>(pairs), ens));
  const auto u2 = raw_scores(pn::uncertainty_scores(std::span<const pn::TrajectoryPair>(swapped), ens));
  asym += u1 != u2;
  for (std::size_t i = 0; i + 1 < pm_trajs.size(); i += 2) {
    const auto p = pn::make_pair(pm_trajs[i], pm_trajs[i + 1]);
    asym += pn::similarity_flip_prob(p, pn::SimilarityMetric::l2) !=
            pn::similarity_flip_prob(p.swapped(), pn::SimilarityMetric::l2);
    for (double beta : {0.5, 1.0, 3.0}) {
      worst_mag = std::max(worst_mag, std::abs(pn::magnitude_flip_prob(p, beta, all) +
                                               pn::magnitude_flip_prob(p.swapped(), beta, all) - 1.0));
    }
  }
  return {asym == 0 && worst_mag <= 1e-12,
          fmt("%d asymmetric similarity/uncertainty scores; magnitude max |N + N' - 1| = %.1e", asym,
              worst_mag)};
}

// ---------------------------------------------------------------------------

Outcome remote_teacher_protocol() {
  const auto env = gridworld8();
  const auto batch = gridworld_batch(100, 1101);
  std::vector<pn::TrajectoryPair> pairs;
  std::vector<pn::PreferenceLabel> oracle;
  for (const auto& s : batch) {
    pairs.push_back(s.pair);
    oracle.push_back(s.ground_truth);
  }
  pn::RemoteTeacherConfig cfg;
  cfg.endpoint_url = "http://mock/v1";
  cfg.model_name = "mock";
  cfg.max_in_flight = 1;

  // The first 46 verdicts contradict the oracle; the rest agree.
  auto scripted = [&](auto verdict_for) {
    auto mock = std::make_unique<pn::MockTransport>();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      mock->push_reply("The two images show grids.");
      mock->push_reply(verdict_for(i));
    }
    return mock;
  };
  auto say = [](pn::PreferenceLabel l) { return std::string(l == pn::PreferenceLabel::first ? "0" : "1"); };
  auto flips = scripted([&](std::size_t i) { return say(i < 46 ? pn::reversed(oracle[i]) : oracle[i]); });
  const auto verdicts = pn::query_batch(cfg, env, pairs, *flips);
  const double noise = pn::measure_noise(verdicts, oracle);
  bool ok = noise == 0.46;

  // Every fifth verdict is indifferent.
  auto unsure = scripted([&](std::size_t i) { return i % 5 == 0 ? std::string("-1") : say(oracle[i]); });
  const auto mixed = pn::query_batch(cfg, env, pairs, *unsure);
  const auto training = pn::remote_labels(pairs, mixed, 1.0);
  std::set<std::pair<std::uint64_t, std::uint64_t>> used;
  for (const auto& s : training) used.emplace(s.pair.first.id, s.pair.second.id);
  std::size_t leaked = 0;
  for (std::size_t i = 0; i < pairs.size(); i += 5) leaked += used.count({pairs[i].first.id, pairs[i].second.id});
  ok = ok && leaked == 0 && training.size() == 80 && pn::measure_noise(mixed, oracle) == 0.0;
  return {ok, fmt("measure_noise = %.17g for 46/100 scripted flips; %zu indifferent verdicts leaked into %zu training samples",
                  noise, leaked, training.size())};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const Shared& shared) {
  std::vector<pn::ExperimentConfig> configs;
  {
    pn::ExperimentConfig cfg;
    cfg.noise = pn::standard_noise_suite(0.3, {0, 1})[7];  // hybrid over latent similarity
    cfg.denoiser = pn::DenoiserConfig{};
    cfg.train.hidden = {32, 32};
    cfg.train.epochs_per_update = 10;
    cfg.encoder.epochs = 5;
    cfg.protocol.rounds = 3;
    cfg.protocol.seeds = {0, 1, 2};
    cfg.protocol.policy_steps = 10000;
    configs.push_back(cfg);
  }
  {
    pn::ExperimentConfig cfg;
    cfg.env.kind = pn::EnvKind::pointmass;
    cfg.noise.kind = pn::NoiseKind::magnitude;
    cfg.noise.target_rate = 0.2;
    cfg.noise.feature_subset = pn::default_magnitude_subset(pn::EnvKind::pointmass);
    cfg.train.hidden = {16};
    cfg.train.epochs_per_update = 5;
    cfg.protocol.rounds = 2;
    cfg.protocol.seeds = {3, 4};
    cfg.protocol.policy_steps = 20000;
    configs.push_back(cfg);
  }
  int identical = 0, total = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    auto cfg = configs[c];
    std::vector<std::string> bytes;
    for (std::size_t jobs : {1, 1, 2}) {
      cfg.output_path = (shared.dir / fmt("det_%zu_%zu.csv", c, bytes.size())).string();
      pn::RunOptions opts;
      opts.jobs = jobs;
      pn::run_experiment(cfg, opts);
      bytes.push_back(slurp(cfg.output_path));
    }
    total += 2;
    identical += (bytes[1] == bytes[0]) + (bytes[2] == bytes[0]);
  }
  return {identical == total, fmt("%d/%d reruns byte-identical (serial rerun and 2 parallel jobs, gridworld and pointmass)",
                                  identical, total)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  Shared shared;
  shared.dir = fs::temp_directory_path() / fmt("prefnoise_acceptance_%d", static_cast<int>(::getpid()));
  fs::create_directories(shared.dir);

  struct Criterion {
    const char* name;
    double budget_seconds;  // 0 means unbounded
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"noise-rate calibration", 60, noise_rate_calibration},
      {"equation fidelity", 30, equation_fidelity},
      {"brute-force selection oracles", 60, brute_force_selection},
      {"reward-net gradient check", 60, gradient_check},
      {"clean-label recovery", 300, [&] { return clean_label_recovery(shared); }},
      {"degradation monotonicity", 900, [&] { return degradation_monotonicity(shared); }},
      {"feature-dependent noise harder to filter", 600, fdn_harder_to_filter},
      {"symmetry suite", 30, symmetry_suite},
      {"remote-teacher protocol", 30, remote_teacher_protocol},
      {"determinism", 0, [&] { return determinism(shared); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    const double reused_before = shared.clean_seconds;
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double secs = seconds_since(start);
    // The degradation check reuses the clean run; charge its time here as well.
    if (number == 6 && reused_before > 0.0) secs += reused_before;
    const double budget = criteria[i].budget_seconds;
    if (budget > 0.0 && secs > budget) {
      outcome.pass = false;
      outcome.detail += fmt("; over the %.0f s budget", budget);
    }
    std::printf("%s %2d %s: %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", number, criteria[i].name,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
    failed += outcome.pass ? 0 : 1;
  }
  fs::remove_all(shared.dir);
  return failed == 0 ? 0 : 1;
}

#include "prefnoise/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prefnoise/errors.hpp"

namespace prefnoise {

using nlohmann::json;

std::string_view to_string(TeacherKind kind) {
  return kind == TeacherKind::scripted ? "scripted" : "remote";
}

std::vector<std::size_t> default_magnitude_subset(EnvKind kind) {
  if (kind == EnvKind::pointmass) return {2, 3};
  return {0, 1};
}

void ProtocolConfig::validate() const {
  if (queries_per_round < 1) throw ConfigError("protocol.queries_per_round must be >= 1");
  if (rounds < 1) throw ConfigError("protocol.rounds must be >= 1");
  if (seeds.empty()) throw ConfigError("protocol.seeds must list at least one seed");
  if (initial_rollouts < 2) throw ConfigError("protocol.initial_rollouts must be >= 2");
  if (heldout_pairs < 1) throw ConfigError("protocol.heldout_pairs must be >= 1");
  if (policy_steps < 0) throw ConfigError("protocol.policy_steps must be >= 0");
  if (eval_episodes < 1) throw ConfigError("protocol.eval_episodes must be >= 1");
  if (tie_band < 0.0) throw ConfigError("protocol.tie_band must be >= 0");
  if (denoise_warmup_rounds < 0) throw ConfigError("protocol.denoise_warmup_rounds must be >= 0");
  for (double r : sweep_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("protocol.rates entries must lie in [0, 1]");
  }
}

void ExperimentConfig::validate() const {
  env.validate();
  noise.validate();
  train.validate();
  protocol.validate();
  if (denoiser) denoiser->validate();
  if (teacher == TeacherKind::remote) {
    if (!remote) throw ConfigError("teacher.kind = remote needs endpoint settings");
    remote->validate();
  }
  if (noise.needs_encoder()) {
    EncoderConfig enc = encoder;
    enc.input_dim = static_cast<std::size_t>(env.horizon) * 4;
    enc.validate();
  }
  if (output_path.empty()) throw ConfigError("output path is empty");
}

namespace {

/// Read access to one JSON object that records which keys were consumed.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : j_.items()) {
      bool known = false;
      for (auto k : keys) known = known || key == k;
      if (!known) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return path_ + "." + key; }
  const std::string& where() const noexcept { return path_; }

  template <typename T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  Node child(const std::string& key) const { return Node(j_.at(key), path(key)); }

 private:
  const json& j_;
  std::string path_;
};

template <typename Fn>
auto wrap(const std::string& where, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

EnvSpec parse_env(const Node& n) {
  n.allow({"kind", "grid_size", "bound", "horizon", "gamma", "fixed_start"});
  EnvSpec spec;
  std::string kind = "gridworld";
  n.get("kind", kind);
  spec.kind = wrap(n.path("kind"), [&] { return env_kind_from_string(kind); });
  n.get("grid_size", spec.grid_size);
  n.get("bound", spec.bound);
  n.get("horizon", spec.horizon);
  n.get("gamma", spec.gamma);
  n.get("fixed_start", spec.fixed_start);
  return spec;
}

NoiseModelSpec parse_noise(const Node& n, EnvKind env_kind) {
  n.allow({"kind", "rate", "beta", "alpha", "feature_subset", "component", "max_flips_per_batch",
           "mode"});
  NoiseModelSpec spec;
  std::string kind = "uniform";
  n.get("kind", kind);
  spec.kind = wrap(n.path("kind"), [&] { return noise_kind_from_string(kind); });
  n.get("rate", spec.target_rate);
  n.get("beta", spec.beta);
  n.get("alpha", spec.alpha);
  n.get("feature_subset", spec.feature_subset);
  if (spec.kind == NoiseKind::magnitude && spec.feature_subset.empty()) {
    spec.feature_subset = default_magnitude_subset(env_kind);
  }
  if (n.has("max_flips_per_batch")) {
    std::size_t cap = 0;
    n.get("max_flips_per_batch", cap);
    spec.max_flips_per_batch = cap;
  }
  std::string mode = "rescaled";
  n.get("mode", mode);
  if (mode == "rescaled") {
    spec.mode = ProbabilityMode::rescaled;
  } else if (mode == "raw") {
    spec.mode = ProbabilityMode::raw;
  } else {
    throw ConfigError(n.path("mode") + ": expected 'rescaled' or 'raw', got '" + mode + "'");
  }
  if (n.has("component")) {
    NoiseModelSpec component = parse_noise(n.child("component"), env_kind);
    component.target_rate = spec.target_rate;
    spec.component = std::make_shared<const NoiseModelSpec>(std::move(component));
  }
  wrap(n.where(), [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

RemoteTeacherConfig parse_remote(const Node& n) {
  RemoteTeacherConfig cfg;
  n.get("endpoint_url", cfg.endpoint_url);
  n.get("model", cfg.model_name);
  n.get("api_key_env", cfg.api_key_env_var);
  long timeout_ms = cfg.timeout.count();
  n.get("timeout_ms", timeout_ms);
  cfg.timeout = std::chrono::milliseconds(timeout_ms);
  n.get("max_retries", cfg.max_retries);
  n.get("cache_path", cfg.cache_path);
  n.get("goal", cfg.goal);
  n.get("max_in_flight", cfg.max_in_flight);
  n.get("image_side", cfg.image_side);
  return cfg;
}

DenoiserConfig parse_denoiser(const Node& n) {
  n.allow({"threshold", "schedule", "decay", "flip_correction", "flip_delta"});
  DenoiserConfig cfg;
  n.get("threshold", cfg.base_threshold);
  std::string schedule = "constant";
  n.get("schedule", schedule);
  cfg.schedule = wrap(n.path("schedule"), [&] { return threshold_schedule_from_string(schedule); });
  n.get("decay", cfg.decay);
  n.get("flip_correction", cfg.flip_correction);
  n.get("flip_delta", cfg.flip_delta);
  return cfg;
}

void parse_train(const Node& n, ExperimentConfig& cfg) {
  n.allow({"learning_rate", "batch_size", "epochs_per_update", "ensemble_size", "hidden",
           "optimizer", "momentum", "encoder", "agent"});
  TrainConfig& t = cfg.train;
  n.get("learning_rate", t.learning_rate);
  n.get("batch_size", t.batch_size);
  n.get("epochs_per_update", t.epochs_per_update);
  n.get("ensemble_size", t.ensemble_size);
  n.get("hidden", t.hidden);
  std::string optimizer(nn::to_string(t.optimizer));
  n.get("optimizer", optimizer);
  t.optimizer = wrap(n.path("optimizer"), [&] { return nn::optimizer_kind_from_string(optimizer); });
  n.get("momentum", t.momentum);
  if (n.has("encoder")) {
    const Node e = n.child("encoder");
    e.allow({"embedding_dim", "hidden", "learning_rate", "epochs", "batch_size", "kl_weight",
             "reconstruction_weight"});
    e.get("embedding_dim", cfg.encoder.embedding_dim);
    e.get("hidden", cfg.encoder.hidden_dims);
    e.get("learning_rate", cfg.encoder.learning_rate);
    e.get("epochs", cfg.encoder.epochs);
    e.get("batch_size", cfg.encoder.batch_size);
    e.get("kl_weight", cfg.encoder.kl_weight);
    e.get("reconstruction_weight", cfg.encoder.reconstruction_weight);
  }
  if (n.has("agent")) {
    const Node a = n.child("agent");
    a.allow({"q_learning_rate", "exploration", "cem_population", "cem_elite", "cem_eval_episodes",
             "cem_init_std", "policy_stddev"});
    a.get("q_learning_rate", cfg.agent.q_learning_rate);
    a.get("exploration", cfg.agent.exploration);
    a.get("cem_population", cfg.agent.cem_population);
    a.get("cem_elite", cfg.agent.cem_elite);
    a.get("cem_eval_episodes", cfg.agent.cem_eval_episodes);
    a.get("cem_init_std", cfg.agent.cem_init_std);
    a.get("policy_stddev", cfg.agent.policy_stddev);
  }
}

void parse_protocol(const Node& n, ExperimentConfig& cfg) {
  n.allow({"queries_per_round", "rounds", "seeds", "initial_rollouts", "rollouts_per_round",
           "heldout_pairs", "policy_steps", "eval_episodes", "tie_band", "denoise_warmup_rounds",
           "threshold_scope", "rates", "output"});
  ProtocolConfig& p = cfg.protocol;
  n.get("queries_per_round", p.queries_per_round);
  n.get("rounds", p.rounds);
  n.get("seeds", p.seeds);
  n.get("initial_rollouts", p.initial_rollouts);
  n.get("rollouts_per_round", p.rollouts_per_round);
  n.get("heldout_pairs", p.heldout_pairs);
  n.get("policy_steps", p.policy_steps);
  n.get("eval_episodes", p.eval_episodes);
  n.get("tie_band", p.tie_band);
  n.get("denoise_warmup_rounds", p.denoise_warmup_rounds);
  std::string scope = "per_batch";
  n.get("threshold_scope", scope);
  if (scope == "per_batch") {
    p.threshold_scope = ThresholdScope::per_batch;
  } else if (scope == "global") {
    p.threshold_scope = ThresholdScope::global;
  } else {
    throw ConfigError(n.path("threshold_scope") + ": expected 'per_batch' or 'global'");
  }
  n.get("rates", p.sweep_rates);
  n.get("output", cfg.output_path);
}

}  // namespace

NoiseModelSpec noise_from_json(const json& node, EnvKind env_kind) {
  return parse_noise(Node(node, "noise"), env_kind);
}

json noise_to_json(const NoiseModelSpec& spec) {
  json j = {{"kind", std::string(to_string(spec.kind))},
            {"rate", spec.target_rate},
            {"mode", spec.mode == ProbabilityMode::raw ? "raw" : "rescaled"}};
  if (spec.kind == NoiseKind::magnitude) {
    j["beta"] = spec.beta;
    j["feature_subset"] = spec.feature_subset;
  }
  if (spec.kind == NoiseKind::hybrid) {
    j["alpha"] = spec.alpha;
    if (spec.component) {
      json c = noise_to_json(*spec.component);
      c.erase("rate");
      j["component"] = c;
    }
  }
  if (spec.max_flips_per_batch) j["max_flips_per_batch"] = *spec.max_flips_per_batch;
  return j;
}

ParsedConfig parse_config(const json& doc) {
  const Node root(doc, "config");
  root.allow({"schema_version", "env", "noise", "teacher", "denoiser", "train", "protocol"});
  int version = kConfigSchemaVersion;
  root.get("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config.schema_version: unsupported version " + std::to_string(version));
  }

  ParsedConfig out;
  ExperimentConfig& cfg = out.base;
  if (root.has("env")) cfg.env = parse_env(root.child("env"));

  if (root.has("noise")) {
    out.noise_given = true;
    const json& noise = root.raw("noise");
    if (noise.is_array()) {
      if (noise.empty()) throw ConfigError("config.noise: empty list");
      for (std::size_t i = 0; i < noise.size(); ++i) {
        out.noise_kinds.push_back(
            parse_noise(Node(noise[i], "config.noise[" + std::to_string(i) + "]"), cfg.env.kind));
      }
    } else {
      out.noise_kinds.push_back(parse_noise(root.child("noise"), cfg.env.kind));
    }
    cfg.noise = out.noise_kinds.front();
  } else {
    out.noise_kinds.push_back(cfg.noise);
  }

  if (root.has("teacher")) {
    const Node t = root.child("teacher");
    t.allow({"kind", "endpoint_url", "model", "api_key_env", "timeout_ms", "max_retries",
             "cache_path", "goal", "max_in_flight", "image_side"});
    std::string kind = "scripted";
    t.get("kind", kind);
    if (kind == "scripted") {
      cfg.teacher = TeacherKind::scripted;
    } else if (kind == "remote") {
      cfg.teacher = TeacherKind::remote;
      cfg.remote = parse_remote(t);
    } else {
      throw ConfigError(t.path("kind") + ": expected 'scripted' or 'remote', got '" + kind + "'");
    }
  }
  if (root.has("denoiser")) cfg.denoiser = parse_denoiser(root.child("denoiser"));
  if (root.has("train")) parse_train(root.child("train"), cfg);
  if (root.has("protocol")) parse_protocol(root.child("protocol"), cfg);
  cfg.validate();
  return out;
}

ParsedConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace prefnoise

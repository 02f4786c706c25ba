#include "prefnoise/remote_teacher.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prefnoise/errors.hpp"
#include "prefnoise/image.hpp"

namespace prefnoise {

using nlohmann::json;

void RemoteTeacherConfig::validate() const {
  if (endpoint_url.empty()) throw ConfigError("remote teacher: endpoint_url is empty");
  if (model_name.empty()) throw ConfigError("remote teacher: model_name is empty");
  if (timeout.count() <= 0) throw ConfigError("remote teacher: timeout must be positive");
  if (max_retries < 0) throw ConfigError("remote teacher: max_retries must be >= 0");
  if (max_in_flight < 1) throw ConfigError("remote teacher: max_in_flight must be >= 1");
  if (image_side < 1) throw ConfigError("remote teacher: image_side must be >= 1");
}

std::string_view to_string(VerdictLabel label) {
  switch (label) {
    case VerdictLabel::first: return "first";
    case VerdictLabel::second: return "second";
    case VerdictLabel::indifferent: return "indifferent";
  }
  return "unknown";
}

VerdictLabel verdict_label_from_string(std::string_view name) {
  if (name == "first") return VerdictLabel::first;
  if (name == "second") return VerdictLabel::second;
  if (name == "indifferent") return VerdictLabel::indifferent;
  throw ParseError("unknown verdict label '" + std::string(name) + "'", std::string(name));
}

namespace {

constexpr std::string_view kQuestions =
    "1. What is shown in Image 1?\n\n"
    "2. What is shown in Image 2?\n\n"
    "3. ";
constexpr std::string_view kDifferences =
    " Are there any differences between Image 1 and Image 2 in terms of achieving the goal?";

}  // namespace

std::string PromptTemplate::summary_prompt() const {
  std::string out(kQuestions);
  out += goal;
  out += kDifferences;
  return out;
}

std::string PromptTemplate::elicitation_prompt(std::string_view summary) const {
  std::string out = "Based on the text below to the questions:\n\n";
  out += kQuestions;
  out += goal;
  out += kDifferences;
  out += "\n\n";
  out += summary;
  out += "\n\nIs the goal better achieved in Image 1 or Image 2?\n";
  out += reply_line;
  out += "\nReply -1 if unsure or there is no difference.";
  return out;
}

PromptTemplate PromptTemplate::cartpole() {
  return {"The goal is to balance the brown pole on the black cart to be upright."};
}

PromptTemplate PromptTemplate::soccer() {
  PromptTemplate t{"The goal is to move the soccer ball into the goal."};
  t.reply_line =
      "Reply a single line of 0 if Image 1 achieves the goal better, or 1 if Image 2 achieves "
      "the goal better.";
  return t;
}

PromptTemplate PromptTemplate::for_env(EnvKind kind) {
  switch (kind) {
    case EnvKind::gridworld:
      return {"The goal is to move the black square onto the gray square."};
    case EnvKind::pointmass:
      return {"The goal is to move the black dot onto the gray dot in the center."};
  }
  throw std::invalid_argument("no prompt template for this environment");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<VerdictLabel> token_label(std::string_view token) {
  if (token == "0") return VerdictLabel::first;
  if (token == "1") return VerdictLabel::second;
  if (token == "-1") return VerdictLabel::indifferent;
  return std::nullopt;
}

}  // namespace

VerdictLabel parse_verdict(std::string_view reply) {
  const auto whole = trim(reply);
  if (auto label = token_label(whole)) return *label;
  const auto first_line = trim(whole.substr(0, whole.find('\n')));
  if (auto label = token_label(first_line)) return *label;
  throw ParseError("unparseable preference reply", std::string(reply));
}

MockTransport::MockTransport(Responder responder) : responder_(std::move(responder)) {}

void MockTransport::push_reply(std::string content) {
  std::lock_guard lock(mutex_);
  script_.push_back({false, std::move(content)});
}

void MockTransport::push_failure(std::string message) {
  std::lock_guard lock(mutex_);
  script_.push_back({true, std::move(message)});
}

std::string MockTransport::chat_response(std::string_view content) {
  json body = {{"choices", json::array({{{"index", 0},
                                         {"message", {{"role", "assistant"},
                                                      {"content", std::string(content)}}}}})}};
  return body.dump();
}

std::string MockTransport::post(const HttpRequest& request) {
  const std::size_t call = calls_.fetch_add(1);
  Scripted next;
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (responder_) {
      next = {false, ""};
    } else {
      if (script_.empty()) throw TransportError("mock transport: script exhausted");
      next = std::move(script_.front());
      script_.pop_front();
    }
  }
  if (responder_) return responder_(request, call);
  if (next.fail) throw TransportError(next.payload);
  return chat_response(next.payload);
}

std::vector<HttpRequest> MockTransport::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

VerdictCache::VerdictCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto row = json::parse(line);
      RemoteVerdict v;
      v.label = verdict_label_from_string(row.at("label").get<std::string>());
      v.raw_response = row.at("raw").get<std::string>();
      v.latency = std::chrono::milliseconds(row.value("latency_ms", 0));
      v.from_cache = true;
      entries_[{row.at("first_id").get<std::uint64_t>(), row.at("second_id").get<std::uint64_t>(),
                row.at("model").get<std::string>()}] = std::move(v);
    } catch (const json::exception& e) {
      throw ParseError(path_ + ":" + std::to_string(line_no) + ": bad cache entry: " + e.what(),
                       line);
    }
  }
}

std::optional<RemoteVerdict> VerdictCache::lookup(std::uint64_t first, std::uint64_t second,
                                                  const std::string& model) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find({first, second, model});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::store(std::uint64_t first, std::uint64_t second, const std::string& model,
                         const RemoteVerdict& verdict) {
  std::lock_guard lock(mutex_);
  RemoteVerdict cached = verdict;
  cached.from_cache = true;
  entries_[{first, second, model}] = cached;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to verdict cache " + path_);
  const json row = {{"first_id", first},          {"second_id", second},
                    {"model", model},             {"label", std::string(to_string(verdict.label))},
                    {"raw", verdict.raw_response}, {"latency_ms", verdict.latency.count()}};
  out << row.dump() << '\n';
}

std::size_t VerdictCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

namespace {

std::string image_part_url(const GrayImage& image, int side) {
  return "data:image/png;base64," + httplib::detail::base64_encode(to_png(image, side));
}

std::string chat_content(const std::string& body) {
  try {
    const auto parsed = json::parse(body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed chat-completions response: ") + e.what(), body);
  }
}

std::string send_chat(const RemoteTeacherConfig& cfg, Transport& transport, const json& body) {
  HttpRequest request;
  request.url = cfg.endpoint_url;
  while (!request.url.empty() && request.url.back() == '/') request.url.pop_back();
  request.url += "/chat/completions";
  request.body = body.dump();
  request.timeout = cfg.timeout;
  request.headers.emplace_back("Content-Type", "application/json");
  if (!cfg.api_key_env_var.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env_var.c_str()); key != nullptr && *key) {
      request.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    try {
      return chat_content(transport.post(request));
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("chat request failed after " + std::to_string(cfg.max_retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace

RemoteVerdict query_preference(const RemoteTeacherConfig& cfg, const Environment& env,
                               const TrajectoryPair& pair, Transport& transport,
                               VerdictCache* cache) {
  if (cache != nullptr) {
    if (auto hit = cache->lookup(pair.first.id, pair.second.id, cfg.model_name)) return *hit;
  }
  const PromptTemplate prompts =
      cfg.goal.empty() ? PromptTemplate::for_env(env.kind()) : PromptTemplate{cfg.goal};
  const auto [image1, image2] = render_pair(env, pair);
  const auto start = std::chrono::steady_clock::now();

  const json summary_request = {
      {"model", cfg.model_name},
      {"temperature", 0},
      {"messages",
       json::array({{{"role", "user"},
                     {"content",
                      json::array({{{"type", "text"}, {"text", prompts.summary_prompt()}},
                                   {{"type", "image_url"},
                                    {"image_url", {{"url", image_part_url(image1, cfg.image_side)}}}},
                                   {{"type", "image_url"},
                                    {"image_url",
                                     {{"url", image_part_url(image2, cfg.image_side)}}}}})}}})}};
  const std::string summary = send_chat(cfg, transport, summary_request);

  const json elicit_request = {
      {"model", cfg.model_name},
      {"temperature", 0},
      {"messages", json::array({{{"role", "user"},
                                 {"content", prompts.elicitation_prompt(summary)}}})}};
  RemoteVerdict verdict;
  verdict.raw_response = send_chat(cfg, transport, elicit_request);
  verdict.label = parse_verdict(verdict.raw_response);
  verdict.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  if (cache != nullptr) cache->store(pair.first.id, pair.second.id, cfg.model_name, verdict);
  return verdict;
}

std::vector<RemoteVerdict> query_batch(const RemoteTeacherConfig& cfg, const Environment& env,
                                       std::span<const TrajectoryPair> pairs, Transport& transport,
                                       VerdictCache* cache) {
  std::vector<RemoteVerdict> out(pairs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1)) {
      try {
        out[i] = query_preference(cfg, env, pairs[i], transport, cache);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = pairs.size();
      }
    }
  };
  const std::size_t workers = std::min(cfg.max_in_flight, pairs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double measure_noise(std::span<const RemoteVerdict> verdicts,
                     std::span<const PreferenceLabel> oracle_labels) {
  if (verdicts.size() != oracle_labels.size()) {
    throw std::invalid_argument("measure_noise: " + std::to_string(verdicts.size()) +
                                " verdicts vs " + std::to_string(oracle_labels.size()) +
                                " oracle labels");
  }
  std::size_t counted = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].label == VerdictLabel::indifferent) continue;
    ++counted;
    const auto remote =
        verdicts[i].label == VerdictLabel::first ? PreferenceLabel::first : PreferenceLabel::second;
    if (remote != oracle_labels[i]) ++wrong;
  }
  return counted == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(counted);
}

std::vector<LabeledPreference> remote_labels(std::span<const TrajectoryPair> pairs,
                                             std::span<const RemoteVerdict> verdicts,
                                             double gamma) {
  if (pairs.size() != verdicts.size()) {
    throw std::invalid_argument("remote_labels: pairs and verdicts differ in length");
  }
  std::vector<LabeledPreference> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (verdicts[i].label == VerdictLabel::indifferent) continue;
    const auto truth = oracle_label(pairs[i], gamma);
    if (!truth) continue;
    const auto observed =
        verdicts[i].label == VerdictLabel::first ? PreferenceLabel::first : PreferenceLabel::second;
    auto sample = LabeledPreference::clean(pairs[i], *truth);
    out.push_back(sample.with_flip(observed != *truth, 0.0));
  }
  return out;
}

}  // namespace prefnoise

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "prefnoise/env.hpp"
#include "prefnoise/teacher.hpp"

namespace prefnoise {

struct RemoteTeacherConfig {
  std::string endpoint_url;            // e.g. http://localhost:8000/v1
  std::string model_name;
  std::string api_key_env_var = "OPENAI_API_KEY";  // empty or unset: no Authorization header
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  std::string cache_path;              // empty: no persistent cache
  std::string goal;                    // empty: the default goal for the environment
  std::size_t max_in_flight = 4;
  int image_side = 64;

  void validate() const;
};

enum class VerdictLabel : std::uint8_t { first, second, indifferent };

std::string_view to_string(VerdictLabel label);
VerdictLabel verdict_label_from_string(std::string_view name);

struct RemoteVerdict {
  VerdictLabel label = VerdictLabel::indifferent;
  std::string raw_response;
  std::chrono::milliseconds latency{0};
  bool from_cache = false;
};

/// Goal sentence plus reply instruction for one task.
struct PromptTemplate {
  std::string goal;
  std::string reply_line =
      "Reply with a single line of 0 if Image 1 achieves the goal better, or 1 if Image 2 "
      "achieves the goal better.";

  /// First-stage text. The two images follow it as separate message parts.
  std::string summary_prompt() const;
  /// Second-stage text with the first-stage answer in place of the summary placeholder.
  std::string elicitation_prompt(std::string_view summary) const;

  static PromptTemplate cartpole();
  static PromptTemplate soccer();
  static PromptTemplate for_env(EnvKind kind);
};

/// Maps "0", "1", "-1" (whole reply or first line, surrounding whitespace ignored) to a
/// verdict. Anything else throws ParseError carrying the raw text.
VerdictLabel parse_verdict(std::string_view reply);

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{0};
};

/// Sends one request and returns the response body. Throws TransportError on failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport; supports http:// and https:// URLs.
class HttpTransport final : public Transport {
 public:
  std::string post(const HttpRequest& request) override;
};

/// Offline transport. Each call hands the request to a responder; the default responder
/// replays scripted chat replies in order, failing with TransportError when exhausted.
class MockTransport final : public Transport {
 public:
  using Responder = std::function<std::string(const HttpRequest&, std::size_t call)>;

  MockTransport() = default;
  explicit MockTransport(Responder responder);

  /// Queue a chat reply; `post` wraps it in a chat-completions response body.
  void push_reply(std::string content);
  /// Queue a transport failure.
  void push_failure(std::string message = "scripted failure");

  std::string post(const HttpRequest& request) override;

  std::size_t call_count() const noexcept { return calls_.load(); }
  std::vector<HttpRequest> requests() const;

  static std::string chat_response(std::string_view content);

 private:
  struct Scripted {
    bool fail;
    std::string payload;
  };
  Responder responder_;
  mutable std::mutex mutex_;
  std::deque<Scripted> script_;
  std::vector<HttpRequest> requests_;
  std::atomic<std::size_t> calls_{0};
};

/// Append-only JSON-lines verdict cache keyed by (first id, second id, model).
class VerdictCache {
 public:
  VerdictCache() = default;
  /// Loads existing entries from `path` (if present) and appends new ones to it.
  explicit VerdictCache(std::string path);

  std::optional<RemoteVerdict> lookup(std::uint64_t first, std::uint64_t second,
                                      const std::string& model) const;
  void store(std::uint64_t first, std::uint64_t second, const std::string& model,
             const RemoteVerdict& verdict);
  std::size_t size() const;

 private:
  using Key = std::tuple<std::uint64_t, std::uint64_t, std::string>;
  std::string path_;
  mutable std::mutex mutex_;
  std::map<Key, RemoteVerdict> entries_;
};

/// Two-stage chat query: summarize the two final-state images, then elicit 0/1/-1.
/// Consults `cache` first when given; a hit issues no request.
RemoteVerdict query_preference(const RemoteTeacherConfig& cfg, const Environment& env,
                               const TrajectoryPair& pair, Transport& transport,
                               VerdictCache* cache = nullptr);

/// Queries every pair, keeping at most cfg.max_in_flight pairs outstanding. Results are in
/// input order.
std::vector<RemoteVerdict> query_batch(const RemoteTeacherConfig& cfg, const Environment& env,
                                       std::span<const TrajectoryPair> pairs, Transport& transport,
                                       VerdictCache* cache = nullptr);

/// Fraction of non-indifferent verdicts that disagree with the oracle labels.
/// Throws std::invalid_argument on a length mismatch. Returns 0 when every verdict is
/// indifferent.
double measure_noise(std::span<const RemoteVerdict> verdicts,
                     std::span<const PreferenceLabel> oracle_labels);

/// Training samples from remote verdicts: indifferent verdicts and oracle ties are dropped,
/// `observed` is the remote label and `ground_truth` the oracle label.
std::vector<LabeledPreference> remote_labels(std::span<const TrajectoryPair> pairs,
                                             std::span<const RemoteVerdict> verdicts,
                                             double gamma);

}  // namespace prefnoise

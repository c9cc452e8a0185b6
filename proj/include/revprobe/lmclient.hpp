#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace revprobe::lm {

/// Prompt prefix the wire protocol maps to the model's BOS token.
inline constexpr std::string_view kBosSentinel = "<BOS>";

enum class DecodingMode { greedy, sample };

/// Defaults follow the generation settings used for every probe:
/// 28 new tokens, top_p = temperature = repetition penalty = 1.
struct DecodingParams {
  int max_tokens = 28;
  double temperature = 1.0;
  double top_p = 1.0;
  double repetition_penalty = 1.0;
  std::int64_t seed = 0;
  std::vector<std::string> stop;
  DecodingMode mode = DecodingMode::greedy;

  void validate() const;
};

struct TokenLogprob {
  std::string text;
  double logprob = 0.0;

  bool operator==(const TokenLogprob&) const = default;
};

enum class FinishReason { stop, length };

struct GenerationResult {
  std::string text;
  std::vector<TokenLogprob> tokens;
  FinishReason finish = FinishReason::length;

  bool operator==(const GenerationResult&) const = default;
};

struct ScoreResult {
  double total = 0.0;
  std::vector<double> per_token;

  bool operator==(const ScoreResult&) const = default;
};

struct HiddenVector {
  std::vector<double> values;
  std::string layer = "final";
  std::string position = "last";

  bool operator==(const HiddenVector&) const = default;
};

struct BackendInfo {
  std::string model_id;
  std::size_t hidden_size = 0;
  std::size_t max_context = 0;
};

enum class BackendKind { http, replay, oracle };

std::string_view to_string(BackendKind k);

struct BackendDescriptor {
  std::string id;
  BackendKind kind = BackendKind::oracle;
  std::optional<std::string> endpoint;
  std::size_t hidden_size = 1;
  std::size_t max_context = 4096;

  void validate() const;
};

/// A causal language model reachable through generate / score / hidden.
/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;
  virtual BackendInfo info();

  virtual GenerationResult generate(std::string_view prompt, const DecodingParams& params) = 0;
  virtual ScoreResult score_continuation(std::string_view prompt, std::string_view continuation) = 0;
  virtual HiddenVector final_hidden(std::string_view prompt) = 0;
};

// ---------------------------------------------------------------------------
// Wire format. Requests are canonical JSON (sorted keys, compact), which is
// also what cache keys are computed over.

namespace wire {

nlohmann::json generate_request(std::string_view prompt, const DecodingParams& params);
nlohmann::json score_request(std::string_view prompt, std::string_view continuation);
nlohmann::json hidden_request(std::string_view prompt);

DecodingParams decoding_params_from(const nlohmann::json& request);

nlohmann::json to_json(const GenerationResult& r);
nlohmann::json to_json(const ScoreResult& r);
nlohmann::json to_json(const HiddenVector& r);
nlohmann::json to_json(const BackendInfo& r);

/// Schema-checked parsers; violations raise ProtocolError.
GenerationResult parse_generation(const nlohmann::json& j);
ScoreResult parse_score(const nlohmann::json& j);
HiddenVector parse_hidden(const nlohmann::json& j);
BackendInfo parse_info(const nlohmann::json& j);

std::string canonical(const nlohmann::json& j);

}  // namespace wire

/// Hex SHA-256 over backend id, endpoint name and canonical payload, each
/// separated by a NUL byte.
std::string cache_key(std::string_view backend_id, std::string_view endpoint_name, std::string_view payload);

std::string sha256_hex(std::string_view data);

/// Cuts `text` right after the earliest occurrence of any stop string.
/// Returns the cut position or nullopt when no stop string occurs.
std::optional<std::size_t> find_stop(std::string_view text, const std::vector<std::string>& stop);

// ---------------------------------------------------------------------------

/// Deterministic stand-in for a language model.
///
/// The query of a prompt is its last line with the trailing delimiter (or
/// the NL suffix) removed. Greedy generation answers answer_map[query] with
/// probability correct_prob and otherwise a seeded distractor drawn from the
/// other answers, always in the shape "<word>\n". Continuations are scored
/// with token_logprob per token. Hidden vectors are the centroid of the
/// query's category plus seeded Gaussian noise.
struct OracleSpec {
  std::map<std::string, std::string> answer_map;    // query text -> target word
  std::map<std::string, std::string> category_map;  // query text -> category
  std::map<std::string, std::vector<double>> centroids;
  double correct_prob = 1.0;
  double noise_sigma = 0.0;
  double token_logprob = -1.0;
  /// Sampling-mode distribution over canned answers (word, weight).
  std::vector<std::pair<std::string, double>> sample_answers;
  std::uint64_t seed = 0;
  std::string arrow = "⇒";
  std::string nl_suffix = " can be called as";

  void validate() const;
  std::size_t hidden_size() const;
};

/// Pieces used by the oracle for both generation and scoring: a newline,
/// or optional spaces followed by a run of non-space characters.
std::vector<std::string> oracle_tokenize(std::string_view s);

class OracleBackend final : public Backend {
 public:
  explicit OracleBackend(OracleSpec spec, std::string id = "oracle");

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  GenerationResult generate(std::string_view prompt, const DecodingParams& params) override;
  ScoreResult score_continuation(std::string_view prompt, std::string_view continuation) override;
  HiddenVector final_hidden(std::string_view prompt) override;

  const OracleSpec& spec() const noexcept { return spec_; }
  /// The query text the oracle reads out of a prompt.
  std::string query_of(std::string_view prompt) const;

 private:
  std::string answer_for(const std::string& query, const DecodingParams& params) const;

  OracleSpec spec_;
  BackendDescriptor descriptor_;
  std::vector<std::string> vocabulary_;  // distinct targets, sorted
};

/// Serves recorded responses. Fixture lines are
/// {"key": str, "endpoint": "generate"|"score"|"hidden", "request": {...}, "response": {...}}
/// and are matched on endpoint plus canonical request.
class ReplayBackend final : public Backend {
 public:
  ReplayBackend(const std::filesystem::path& fixture, std::string id = "replay", std::size_t hidden_size = 1);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  GenerationResult generate(std::string_view prompt, const DecodingParams& params) override;
  ScoreResult score_continuation(std::string_view prompt, std::string_view continuation) override;
  HiddenVector final_hidden(std::string_view prompt) override;

  std::size_t size() const noexcept { return responses_.size(); }

 private:
  const nlohmann::json* find(std::string_view endpoint, const nlohmann::json& request) const;

  BackendDescriptor descriptor_;
  std::map<std::pair<std::string, std::string>, nlohmann::json> responses_;
};

/// Client for a server speaking the JSON/HTTP protocol under /v1.
class HttpBackend final : public Backend {
 public:
  /// Queries /v1/info to fill in the descriptor.
  explicit HttpBackend(std::string endpoint, std::string id = {}, double timeout_seconds = 120.0);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  BackendInfo info() override;
  GenerationResult generate(std::string_view prompt, const DecodingParams& params) override;
  ScoreResult score_continuation(std::string_view prompt, std::string_view continuation) override;
  HiddenVector final_hidden(std::string_view prompt) override;

  /// Raw POST used by the conformance checker.
  nlohmann::json post(std::string_view path, const nlohmann::json& body) const;
  nlohmann::json get(std::string_view path) const;

 private:
  std::string scheme_host_port_;
  std::string base_path_;
  double timeout_seconds_;
  BackendDescriptor descriptor_;
};

/// Content-addressed, append-only response cache in front of any backend.
/// The store is <dir>/<backend id>.jsonl in the replay fixture format, so a
/// cache file can be replayed directly. Results are always returned after a
/// JSON round trip so hits and misses are byte-identical.
class CachingBackend final : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir);

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  BackendInfo info() override { return inner_->info(); }
  GenerationResult generate(std::string_view prompt, const DecodingParams& params) override;
  ScoreResult score_continuation(std::string_view prompt, std::string_view continuation) override;
  HiddenVector final_hidden(std::string_view prompt) override;

  std::size_t backend_calls() const noexcept { return misses_.load(); }
  std::size_t cache_hits() const noexcept { return hits_.load(); }
  const std::filesystem::path& store_path() const noexcept { return store_; }

 private:
  template <typename Compute>
  nlohmann::json lookup_or_compute(std::string_view endpoint, const nlohmann::json& request, Compute&& compute);

  std::shared_ptr<Backend> inner_;
  std::filesystem::path store_;
  std::mutex mutex_;
  std::map<std::string, nlohmann::json> entries_;
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> hits_{0};
};

/// Counts calls that reach the wrapped backend.
class CountingBackend final : public Backend {
 public:
  explicit CountingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  BackendInfo info() override { return inner_->info(); }
  GenerationResult generate(std::string_view prompt, const DecodingParams& params) override {
    ++calls_;
    return inner_->generate(prompt, params);
  }
  ScoreResult score_continuation(std::string_view prompt, std::string_view continuation) override {
    ++calls_;
    return inner_->score_continuation(prompt, continuation);
  }
  HiddenVector final_hidden(std::string_view prompt) override {
    ++calls_;
    return inner_->final_hidden(prompt);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------

/// Serves any backend over the HTTP protocol (used for the oracle in tests
/// and by `backend serve-oracle`).
class ProtocolServer {
 public:
  explicit ProtocolServer(std::shared_ptr<Backend> backend);
  ~ProtocolServer();
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and serves on a
  /// background thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Protocol conformance checks against a live server: response schemas,
/// greedy determinism, score/generate log-probability consistency and the
/// hidden-size invariant.
std::vector<ConformanceCheck> verify_backend(const std::string& url, double tolerance = 1e-4);

}  // namespace revprobe::lm

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "predname/prompts.hpp"

namespace predname {

struct ModelEndpoint {
  std::string model_id;
  std::string base_url;      // e.g. https://api.openai.com/v1
  std::string auth_env_var;  // empty: default_auth_env_var(model_id)
  std::string request_model; // model name sent on the wire; empty: model_id
  int max_retries = 2;
  std::chrono::milliseconds timeout{60000};
  nlohmann::json params = nlohmann::json::object();  // merged into the request body

  std::string auth_variable() const;
  std::string wire_model() const { return request_model.empty() ? model_id : request_model; }
};

/// "gpt-4o" -> "GPT_4O_API_KEY".
std::string default_auth_env_var(std::string_view model_id);

enum class GatewayMode { Live, Record, Replay };
enum class BackendKind { Live, Replay };

std::string_view to_string(GatewayMode mode) noexcept;
std::optional<GatewayMode> gateway_mode_from_string(std::string_view text) noexcept;
std::string_view to_string(BackendKind kind) noexcept;

struct CompletionRequest {
  std::string model_id;
  std::string prompt_text;
  int round_index = 0;
  PromptPurpose purpose = PromptPurpose::Suggest;
  std::vector<std::string> placeholders;
};

struct CompletionExchange {
  CompletionRequest request;
  std::string response_text;
  std::optional<double> latency_ms;  // unset for replayed exchanges
  BackendKind backend = BackendKind::Replay;
  std::string digest;
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
};

std::string sha256_hex(std::string_view data);

/// Content hash of the request triple; stable across processes and platforms.
std::string exchange_digest(std::string_view model_id, int round_index, std::string_view prompt_text);

struct FixtureRecord {
  std::string digest;
  std::string model_id;
  int round_index = 0;
  std::string prompt_sha256;
  std::string response_text;
  std::string recorded_at;
  std::optional<std::string> error;  // a failed exchange, replayed as a TransportError

  nlohmann::ordered_json to_json() const;
  static FixtureRecord from_json(const nlohmann::json& j);
};

/// JSON-lines store of recorded exchanges keyed by digest. Safe to share
/// between threads.
class FixtureStore {
 public:
  FixtureStore() = default;  // in-memory only
  /// Loads `path` if it exists. When `writable`, appended records are also
  /// written to the file.
  FixtureStore(std::filesystem::path path, bool writable);

  std::optional<FixtureRecord> find(const std::string& digest) const;
  void append(const FixtureRecord& record);
  std::size_t size() const;
  std::vector<FixtureRecord> records() const;

 private:
  mutable std::mutex mutex_;
  std::filesystem::path path_;
  bool writable_ = false;
  std::vector<FixtureRecord> records_;
  std::map<std::string, std::size_t> index_;
};

/// Something that answers chat prompts. Implementations throw
/// TransportError (or AuthMissing) on failure and must be thread-safe.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ModelEndpoint& endpoint, const CompletionRequest& request) = 0;
};

/// OpenAI-compatible POST {base_url}/chat/completions with retries.
class HttpChatBackend : public ChatBackend {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  explicit HttpChatBackend(EnvLookup env = {});
  std::string complete(const ModelEndpoint& endpoint, const CompletionRequest& request) override;

  /// Request body for one prompt; exposed for tests.
  static nlohmann::json request_body(const ModelEndpoint& endpoint, const std::string& prompt_text);
  /// The first choice's message content; throws TransportError on a malformed body.
  static std::string response_text(const std::string& body);

 private:
  EnvLookup env_;
};

std::optional<std::string> environment_variable(const std::string& name);

class Gateway {
 public:
  using Clock = std::function<std::string()>;  // ISO-8601 timestamp for recorded_at

  /// Live and Record need a backend; Record and Replay need a store.
  Gateway(GatewayMode mode, std::shared_ptr<ChatBackend> backend,
          std::shared_ptr<FixtureStore> store, Clock clock = {});

  GatewayMode mode() const noexcept { return mode_; }

  /// Throws TransportError, AuthMissing or ReplayMiss.
  CompletionExchange complete(const ModelEndpoint& endpoint, const RenderedPrompt& prompt,
                              int round_index);

  struct Job {
    const ModelEndpoint* endpoint = nullptr;
    RenderedPrompt prompt;
    int round_index = 0;
  };

  /// Runs jobs on up to `workers` threads. Results come back in job order;
  /// failures are recorded on the exchange instead of thrown.
  std::vector<CompletionExchange> complete_batch(const std::vector<Job>& jobs, int workers = 4);

  /// n endpoints x k rounds, ordered by (endpoint position, round).
  std::vector<CompletionExchange> complete_all(
      const std::vector<ModelEndpoint>& endpoints,
      const std::function<RenderedPrompt(const ModelEndpoint&)>& prompt_for, int k,
      int workers = 4);

 private:
  GatewayMode mode_;
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<FixtureStore> store_;
  Clock clock_;
};

std::string utc_timestamp();

}  // namespace predname

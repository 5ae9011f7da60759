#include <algorithm>
#include <atomic>
#include <cctype>
#include <ctime>
#include <thread>

#include "predname/errors.hpp"
#include "predname/gateway.hpp"

namespace predname {

std::string default_auth_env_var(std::string_view model_id) {
  std::string out;
  for (char c : model_id) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  }
  return out + "_API_KEY";
}

std::string ModelEndpoint::auth_variable() const {
  return auth_env_var.empty() ? default_auth_env_var(model_id) : auth_env_var;
}

std::string_view to_string(GatewayMode mode) noexcept {
  switch (mode) {
    case GatewayMode::Live: return "live";
    case GatewayMode::Record: return "record";
    case GatewayMode::Replay: return "replay";
  }
  return "replay";
}

std::optional<GatewayMode> gateway_mode_from_string(std::string_view text) noexcept {
  if (text == "live") return GatewayMode::Live;
  if (text == "record") return GatewayMode::Record;
  if (text == "replay") return GatewayMode::Replay;
  return std::nullopt;
}

std::string_view to_string(BackendKind kind) noexcept {
  return kind == BackendKind::Live ? "live" : "replay";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Gateway::Gateway(GatewayMode mode, std::shared_ptr<ChatBackend> backend,
                 std::shared_ptr<FixtureStore> store, Clock clock)
    : mode_(mode), backend_(std::move(backend)), store_(std::move(store)),
      clock_(clock ? std::move(clock) : Clock(utc_timestamp)) {
  if (mode_ != GatewayMode::Replay && !backend_) throw Error("live and record modes need a chat backend");
  if (mode_ != GatewayMode::Live && !store_) throw Error("record and replay modes need a fixture store");
}

CompletionExchange Gateway::complete(const ModelEndpoint& endpoint, const RenderedPrompt& prompt,
                                     int round_index) {
  CompletionExchange ex;
  ex.request = {endpoint.model_id, prompt.text, round_index, prompt.purpose,
                prompt.placeholders_addressed};
  ex.digest = exchange_digest(endpoint.model_id, round_index, prompt.text);

  if (mode_ == GatewayMode::Replay) {
    ex.backend = BackendKind::Replay;
    auto record = store_->find(ex.digest);
    if (!record) throw ReplayMiss(endpoint.model_id, round_index, ex.digest);
    if (record->error) throw TransportError("model '" + endpoint.model_id + "': " + *record->error);
    ex.response_text = record->response_text;
    return ex;
  }

  ex.backend = BackendKind::Live;
  const auto started = std::chrono::steady_clock::now();
  std::optional<std::string> failure;
  try {
    ex.response_text = backend_->complete(endpoint, ex.request);
  } catch (const TransportError& e) {
    failure = e.what();
    if (mode_ == GatewayMode::Live) throw;
  }
  ex.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

  if (mode_ == GatewayMode::Record) {
    FixtureRecord record{ex.digest,          endpoint.model_id, round_index, sha256_hex(prompt.text),
                         ex.response_text,   clock_(),          failure};
    store_->append(record);
    if (failure) throw TransportError(*failure);
  }
  return ex;
}

std::vector<CompletionExchange> Gateway::complete_batch(const std::vector<Job>& jobs, int workers) {
  std::vector<CompletionExchange> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        results[i] = complete(*job.endpoint, job.prompt, job.round_index);
      } catch (const Error& e) {
        CompletionExchange& ex = results[i];
        ex.request = {job.endpoint->model_id, job.prompt.text, job.round_index, job.prompt.purpose,
                      job.prompt.placeholders_addressed};
        ex.digest = exchange_digest(job.endpoint->model_id, job.round_index, job.prompt.text);
        ex.backend = mode_ == GatewayMode::Replay ? BackendKind::Replay : BackendKind::Live;
        ex.error = e.what();
      }
    }
  };

  const auto count = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < std::min(count, jobs.size()); ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  return results;
}

std::vector<CompletionExchange> Gateway::complete_all(
    const std::vector<ModelEndpoint>& endpoints,
    const std::function<RenderedPrompt(const ModelEndpoint&)>& prompt_for, int k, int workers) {
  if (k < 1) throw Error("k must be at least 1");
  std::vector<Job> jobs;
  for (const auto& endpoint : endpoints) {
    const RenderedPrompt prompt = prompt_for(endpoint);
    for (int round = 0; round < k; ++round) jobs.push_back({&endpoint, prompt, round});
  }
  return complete_batch(jobs, workers);
}

}  // namespace predname

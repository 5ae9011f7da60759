#include <httplib.h>

#include <thread>

#include "predname/errors.hpp"
#include "predname/gateway.hpp"

namespace predname {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("base_url '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::optional<std::string> environment_variable(const std::string& name) {
  if (const char* value = std::getenv(name.c_str()); value != nullptr && *value != '\0') {
    return std::string(value);
  }
  return std::nullopt;
}

HttpChatBackend::HttpChatBackend(EnvLookup env)
    : env_(env ? std::move(env) : EnvLookup(environment_variable)) {}

nlohmann::json HttpChatBackend::request_body(const ModelEndpoint& endpoint,
                                             const std::string& prompt_text) {
  nlohmann::json body = nlohmann::json::object();
  if (endpoint.params.is_object()) body = endpoint.params;
  body["model"] = endpoint.wire_model();
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}});
  return body;
}

std::string HttpChatBackend::response_text(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected response body: ") + e.what());
  }
}

std::string HttpChatBackend::complete(const ModelEndpoint& endpoint, const CompletionRequest& request) {
  const std::string variable = endpoint.auth_variable();
  const auto key = env_(variable);
  if (!key) throw AuthMissing(variable);

  const SplitUrl url = split_url(endpoint.base_url);
  const std::string payload = request_body(endpoint, request.prompt_text).dump();

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(500) * (1 << (attempt - 1)));

    httplib::Client client(url.origin);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    client.set_bearer_token_auth(*key);

    auto result = client.Post(url.path + "/chat/completions", payload, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status == 200) return response_text(result->body);
    last_error = "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200);
    if (!retryable_status(result->status)) break;
  }
  throw TransportError("model '" + endpoint.model_id + "': " + last_error);
}

}  // namespace predname

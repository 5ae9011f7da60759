#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "predname/cli.hpp"
#include "predname/errors.hpp"

namespace predname::cli {
namespace {

const std::set<std::string> kTopLevelKeys{
    "schema_version", "mode",     "k",           "tie_policy", "rejudge_rounds", "judge_reask",
    "workers",        "force",    "comments",    "fewshot_slice", "templates",   "gateway",
    "defaults",       "suggesters", "judges",    "placeholders"};

const std::set<std::string> kEndpointKeys{"id",        "base_url",   "model", "auth_env",
                                          "max_retries", "timeout_ms", "params"};

template <class T>
T scalar(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "has the wrong type");
  }
}

nlohmann::json to_json(const YAML::Node& node, const std::string& path) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      auto out = nlohmann::json::array();
      for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(to_json(node[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
    case YAML::NodeType::Map: {
      auto out = nlohmann::json::object();
      for (const auto& item : node) {
        const auto key = item.first.as<std::string>();
        out[key] = to_json(item.second, path + "." + key);
      }
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted in the source
  if (text == "true" || text == "false") return text == "true";
  try {
    std::size_t used = 0;
    long long whole = std::stoll(text, &used);
    if (used == text.size()) return whole;
    double real = std::stod(text, &used);
    if (used == text.size()) return real;
  } catch (const std::exception&) {
  }
  return text;
}

void apply_endpoint_fields(const YAML::Node& node, const std::string& path, ModelEndpoint& endpoint) {
  if (!node.IsMap()) throw ConfigError(path, "must be a mapping");
  for (const auto& item : node) {
    const auto key = item.first.as<std::string>();
    if (key == "api_key" || key == "key" || key == "token") {
      throw ConfigError(path + "." + key, "secrets are read from environment variables only");
    }
    if (!kEndpointKeys.count(key)) throw ConfigError(path + "." + key, "unknown field");
  }
  if (node["id"]) endpoint.model_id = scalar<std::string>(node["id"], path + ".id");
  if (node["base_url"]) endpoint.base_url = scalar<std::string>(node["base_url"], path + ".base_url");
  if (node["model"]) endpoint.request_model = scalar<std::string>(node["model"], path + ".model");
  if (node["auth_env"]) endpoint.auth_env_var = scalar<std::string>(node["auth_env"], path + ".auth_env");
  if (node["max_retries"]) {
    endpoint.max_retries = scalar<int>(node["max_retries"], path + ".max_retries");
    if (endpoint.max_retries < 0) throw ConfigError(path + ".max_retries", "must not be negative");
  }
  if (node["timeout_ms"]) {
    const int ms = scalar<int>(node["timeout_ms"], path + ".timeout_ms");
    if (ms <= 0) throw ConfigError(path + ".timeout_ms", "must be positive");
    endpoint.timeout = std::chrono::milliseconds(ms);
  }
  if (node["params"]) {
    if (!node["params"].IsMap()) throw ConfigError(path + ".params", "must be a mapping");
    endpoint.params.update(to_json(node["params"], path + ".params"));
  }
}

std::vector<ModelEndpoint> endpoints(const YAML::Node& root, const char* field, const ModelEndpoint& defaults) {
  const YAML::Node list = root[field];
  if (!list) return {};
  if (!list.IsSequence()) throw ConfigError(field, "must be a list");
  std::vector<ModelEndpoint> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = std::string(field) + "[" + std::to_string(i) + "]";
    ModelEndpoint endpoint = defaults;
    if (list[i].IsScalar()) {
      endpoint.model_id = list[i].as<std::string>();
    } else {
      apply_endpoint_fields(list[i], path, endpoint);
    }
    if (endpoint.model_id.empty()) throw ConfigError(path + ".id", "is required");
    out.push_back(std::move(endpoint));
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(text);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

std::filesystem::path fixture_file(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? path / "fixtures.jsonl" : path;
}

LoadedConfig parse_config(std::string_view yaml_text, const ConfigOverrides& overrides,
                          const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("<file>", std::string("is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<file>", "must be a mapping");
  for (const auto& item : root) {
    const auto key = item.first.as<std::string>();
    if (!kTopLevelKeys.count(key)) throw ConfigError(key, "unknown field");
  }
  if (!root["schema_version"]) throw ConfigError("schema_version", "is required");
  const int version = scalar<int>(root["schema_version"], "schema_version");
  if (version != kConfigSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  }

  LoadedConfig out;
  RunConfig& run = out.run;
  if (root["mode"]) {
    auto mode = run_mode_from_string(scalar<std::string>(root["mode"], "mode"));
    if (!mode) throw ConfigError("mode", "must be zero_shot or few_shot");
    run.mode = *mode;
  }
  if (root["k"]) run.k = scalar<int>(root["k"], "k");
  if (root["tie_policy"]) {
    auto policy = tie_policy_from_string(scalar<std::string>(root["tie_policy"], "tie_policy"));
    if (!policy) throw ConfigError("tie_policy", "must be rejudge, defer or lex");
    run.tie_policy = *policy;
  }
  if (root["rejudge_rounds"]) run.rejudge_rounds = scalar<int>(root["rejudge_rounds"], "rejudge_rounds");
  if (root["judge_reask"]) run.judge_reask = scalar<int>(root["judge_reask"], "judge_reask");
  if (root["workers"]) run.workers = scalar<int>(root["workers"], "workers");
  if (root["force"]) run.force = scalar<bool>(root["force"], "force");
  if (root["comments"]) {
    auto policy = comment_policy_from_string(scalar<std::string>(root["comments"], "comments"));
    if (!policy) throw ConfigError("comments", "must be keep, update or drop");
    out.comments = *policy;
  }
  if (root["fewshot_slice"]) {
    const auto slice = scalar<std::string>(root["fewshot_slice"], "fewshot_slice");
    if (slice == "dependencies") {
      run.fewshot_slice = FewshotSlice::Dependencies;
    } else if (slice == "full_program") {
      run.fewshot_slice = FewshotSlice::FullProgram;
    } else {
      throw ConfigError("fewshot_slice", "must be dependencies or full_program");
    }
  }
  if (root["templates"]) {
    const auto dir = resolve(base_dir, scalar<std::string>(root["templates"], "templates"));
    if (!std::filesystem::is_directory(dir)) throw ConfigError("templates", "no directory " + dir.string());
    run.templates = std::make_shared<const TemplateSet>(TemplateSet::from_directory(dir));
  }

  if (const YAML::Node gateway = root["gateway"]) {
    if (!gateway.IsMap()) throw ConfigError("gateway", "must be a mapping");
    if (gateway["mode"]) {
      auto mode = gateway_mode_from_string(scalar<std::string>(gateway["mode"], "gateway.mode"));
      if (!mode) throw ConfigError("gateway.mode", "must be live, record or replay");
      out.gateway_mode = *mode;
    }
    if (gateway["fixtures"]) {
      out.fixtures = resolve(base_dir, scalar<std::string>(gateway["fixtures"], "gateway.fixtures"));
    }
  }

  ModelEndpoint defaults;
  if (root["defaults"]) apply_endpoint_fields(root["defaults"], "defaults", defaults);
  run.suggesters = endpoints(root, "suggesters", defaults);
  run.judges = endpoints(root, "judges", defaults);

  if (const YAML::Node ph = root["placeholders"]) {
    if (ph["patterns"]) {
      if (!ph["patterns"].IsSequence()) throw ConfigError("placeholders.patterns", "must be a list");
      run.patterns.clear();
      for (std::size_t i = 0; i < ph["patterns"].size(); ++i) {
        const std::string path = "placeholders.patterns[" + std::to_string(i) + "]";
        try {
          run.patterns.emplace_back(scalar<std::string>(ph["patterns"][i], path));
        } catch (const ConfigError& e) {
          throw ConfigError(path, e.what());
        }
      }
    }
  }

  if (overrides.k) run.k = *overrides.k;
  if (overrides.tie_policy) run.tie_policy = *overrides.tie_policy;
  if (overrides.force) run.force = *overrides.force;
  if (overrides.replay && overrides.record) throw ConfigError("gateway.mode", "--replay and --record exclude each other");
  if (overrides.replay) {
    out.gateway_mode = GatewayMode::Replay;
    out.fixtures = fixture_file(*overrides.replay);
  }
  if (overrides.record) {
    out.gateway_mode = GatewayMode::Record;
    out.fixtures = fixture_file(*overrides.record);
  }
  if (out.gateway_mode != GatewayMode::Live && out.fixtures.empty()) {
    throw ConfigError("gateway.fixtures", "is required in record and replay modes");
  }
  run.validate();
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  if (!std::filesystem::exists(path)) throw ConfigError("<file>", "no config file " + path.string());
  return parse_config(read_file(path), overrides, path.parent_path());
}

std::unique_ptr<Gateway> make_gateway(const LoadedConfig& config, const HttpChatBackend::EnvLookup& env) {
  std::shared_ptr<ChatBackend> backend;
  if (config.gateway_mode != GatewayMode::Replay) {
    for (const auto* list : {&config.run.suggesters, &config.run.judges}) {
      for (const auto& endpoint : *list) {
        if (!env(endpoint.auth_variable())) throw AuthMissing(endpoint.auth_variable());
      }
    }
    backend = std::make_shared<HttpChatBackend>(env);
  }
  std::shared_ptr<FixtureStore> store;
  if (config.gateway_mode != GatewayMode::Live) {
    if (config.gateway_mode == GatewayMode::Replay && !std::filesystem::exists(config.fixtures)) {
      throw FixtureError("no fixture file " + config.fixtures.string());
    }
    store = std::make_shared<FixtureStore>(config.fixtures, config.gateway_mode == GatewayMode::Record);
  }
  return std::make_unique<Gateway>(config.gateway_mode, backend, store);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace predname::cli

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "predname/gateway.hpp"
#include "predname/pipeline.hpp"

namespace predname::cli {

/// Command-line values that take precedence over the config file.
struct ConfigOverrides {
  std::optional<int> k;
  std::optional<TiePolicy> tie_policy;
  std::optional<std::filesystem::path> replay;  // fixture file or directory
  std::optional<std::filesystem::path> record;
  std::optional<bool> force;
};

struct LoadedConfig {
  RunConfig run;
  GatewayMode gateway_mode = GatewayMode::Replay;
  std::filesystem::path fixtures;  // empty: in-memory store
  CommentPolicy comments = CommentPolicy::Update;
};

inline constexpr int kConfigSchemaVersion = 1;

/// YAML config; relative paths resolve against `base_dir`. Throws
/// ConfigError naming the offending field.
LoadedConfig parse_config(std::string_view yaml_text, const ConfigOverrides& overrides,
                          const std::filesystem::path& base_dir = {});
LoadedConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// A directory given for --replay/--record means <dir>/fixtures.jsonl.
std::filesystem::path fixture_file(const std::filesystem::path& path);

/// Throws AuthMissing in live and record modes when an endpoint's key
/// variable is unset.
std::unique_ptr<Gateway> make_gateway(const LoadedConfig& config,
                                      const HttpChatBackend::EnvLookup& env = environment_variable);

struct CorpusEntry {
  std::string name;
  std::filesystem::path dir;
  std::filesystem::path program;     // program.pl
  std::filesystem::path config;      // config.yaml, or config-<variant>.yaml
  std::filesystem::path expected;    // expected.json
  std::filesystem::path fixtures;    // fixtures.jsonl
  std::filesystem::path responses;   // responses.json, the scripted answers behind the fixtures
};

const std::vector<std::string>& corpus_names();
std::filesystem::path default_corpus_dir();
/// Throws ConfigError for an unknown name or variant.
CorpusEntry corpus_entry(std::string_view name, const std::filesystem::path& corpus_dir = default_corpus_dir(),
                         std::string_view variant = {});

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

/// Runs one command line. Returns 0 on success, 1 on domain errors and 2 on
/// usage errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace predname::cli

#include <algorithm>

#include "predname/cli.hpp"
#include "predname/errors.hpp"

#ifndef PREDNAME_CORPUS_DIR
#define PREDNAME_CORPUS_DIR "corpus"
#endif

namespace predname::cli {

const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names{"coauthors", "family", "math", "grandparent",
                                              "cousins",   "lcm",    "reachability"};
  return names;
}

std::filesystem::path default_corpus_dir() {
  if (auto env = environment_variable("PREDNAME_CORPUS_DIR")) return *env;
  return PREDNAME_CORPUS_DIR;
}

CorpusEntry corpus_entry(std::string_view name, const std::filesystem::path& corpus_dir, std::string_view variant) {
  const auto& names = corpus_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("corpus", "unknown corpus '" + std::string(name) + "'");
  }
  CorpusEntry entry;
  entry.name = std::string(name);
  entry.dir = corpus_dir / entry.name;
  entry.program = entry.dir / "program.pl";
  entry.config = entry.dir / (variant.empty() ? std::string("config.yaml")
                                              : "config-" + std::string(variant) + ".yaml");
  entry.expected = entry.dir / "expected.json";
  entry.fixtures = entry.dir / "fixtures.jsonl";
  entry.responses = entry.dir / "responses.json";
  if (!std::filesystem::exists(entry.config)) {
    throw ConfigError("variant", "corpus '" + entry.name + "' has no config " + entry.config.filename().string());
  }
  return entry;
}

}  // namespace predname::cli

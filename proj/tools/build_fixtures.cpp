// Rebuilds corpus/<name>/fixtures.jsonl by running every config of a corpus
// in record mode against the scripted answers in responses.json.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <regex>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "predname/cli.hpp"
#include "predname/errors.hpp"

namespace fs = std::filesystem;
using namespace predname;

namespace {

class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(nlohmann::json answers) : answers_(std::move(answers)) {}

  std::string complete(const ModelEndpoint& endpoint, const CompletionRequest& request) override {
    const std::string& model = endpoint.model_id;
    const std::string target = request.placeholders.empty() ? "" : request.placeholders.front();
    const nlohmann::json* hit = nullptr;
    switch (request.purpose) {
      case PromptPurpose::Suggest:
        hit = at({"suggest", model}, request.round_index);
        break;
      case PromptPurpose::Choose:
        hit = at({"choose", model}, 0);
        break;
      case PromptPurpose::FewshotStep:
        hit = at({"fewshot", model, target}, 0);
        break;
      case PromptPurpose::Judge: {
        const int rejudge_round = request.round_index / 10;
        const int attempt = request.round_index % 10;
        hit = rejudge_round == 0 ? at({"judge", model}, attempt)
                                 : at({"rejudge", model, target}, rejudge_round - 1);
        break;
      }
    }
    if (!hit) {
      throw TransportError(model + ": no scripted answer for " + std::string(to_string(request.purpose)) +
                                      " round " + std::to_string(request.round_index));
    }
    return hit->get<std::string>();
  }

 private:
  // A string answers every round; a list is indexed by round.
  const nlohmann::json* at(std::initializer_list<std::string> path, int index) const {
    const nlohmann::json* node = &answers_;
    for (const auto& key : path) {
      if (!node->is_object() || !node->contains(key)) return nullptr;
      node = &(*node)[key];
    }
    if (node->is_string()) return node;
    if (node->is_array() && index >= 0 && static_cast<std::size_t>(index) < node->size()) {
      return &(*node)[static_cast<std::size_t>(index)];
    }
    return nullptr;
  }

  nlohmann::json answers_;
};

int build(const cli::CorpusEntry& base) {
  const auto answers = nlohmann::json::parse(cli::read_file(base.responses));
  auto backend = std::make_shared<ScriptedBackend>(answers);
  fs::remove(base.fixtures);
  auto store = std::make_shared<FixtureStore>(base.fixtures, true);
  const auto program = parse_program(cli::read_file(base.program));

  std::vector<fs::path> configs;
  for (const auto& item : fs::directory_iterator(base.dir)) {
    const auto name = item.path().filename().string();
    if (std::regex_match(name, std::regex(R"(config(-[a-z0-9_]+)?\.yaml)"))) configs.push_back(item.path());
  }
  std::sort(configs.begin(), configs.end());
  for (const auto& path : configs) {
    auto loaded = cli::load_config(path);
    loaded.run.workers = 1;
    Gateway gateway(GatewayMode::Record, backend, store, [] { return std::string("2025-01-01T00:00:00Z"); });
    const auto result = loaded.run.mode == RunMode::FewShot ? run_fewshot(program, loaded.run, gateway)
                                                             : run(program, loaded.run, gateway);
    std::cout << base.name << "/" << path.filename().string() << ": " << result.report.exchanges.size()
              << " exchanges, " << result.report.failures.size() << " failures\n";
  }
  std::cout << base.name << ": " << store->size() << " fixtures\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rebuilds corpus fixtures from scripted answers", "build_fixtures"};
  std::string dir = cli::default_corpus_dir().string();
  std::vector<std::string> names;
  app.add_option("--corpus-dir", dir, "Corpus root directory");
  app.add_option("names", names, "Corpora to rebuild (default: all)");
  CLI11_PARSE(app, argc, argv);
  if (names.empty()) names = cli::corpus_names();
  try {
    for (const auto& name : names) build(cli::corpus_entry(name, dir));
  } catch (const Error& e) {
    std::cerr << "build_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "predname/cli.hpp"
#include "predname/errors.hpp"
#include "predname/gateway.hpp"

namespace predname::test {

inline std::filesystem::path corpus_dir() { return PREDNAME_TEST_CORPUS_DIR; }

inline std::string slurp(const std::filesystem::path& path) { return cli::read_file(path); }

inline LogicProgram corpus_program(const std::string& name) {
  return parse_program(slurp(corpus_dir() / name / "program.pl"));
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("predname-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ModelEndpoint endpoint(const std::string& id) {
  ModelEndpoint e;
  e.model_id = id;
  e.base_url = "http://127.0.0.1:1";
  return e;
}

/// Answers by (model, purpose, round); an unmapped request is a TransportError.
/// The callback form sees the whole request.
class FakeBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ModelEndpoint&, const CompletionRequest&)>;

  FakeBackend() = default;
  explicit FakeBackend(Handler handler) : handler_(std::move(handler)) {}

  void set(const std::string& model, PromptPurpose purpose, int round, std::string text) {
    answers_[{model, static_cast<int>(purpose), round}] = std::move(text);
  }
  void set_all_rounds(const std::string& model, PromptPurpose purpose, int k, const std::string& text) {
    for (int r = 0; r < k; ++r) set(model, purpose, r, text);
  }

  std::string complete(const ModelEndpoint& e, const CompletionRequest& request) override {
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    if (handler_) return handler_(e, request);
    auto it = answers_.find({e.model_id, static_cast<int>(request.purpose), request.round_index});
    if (it == answers_.end()) throw TransportError("no answer for " + e.model_id);
    return it->second;
  }

  std::vector<CompletionRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Handler handler_;
  std::map<std::tuple<std::string, int, int>, std::string> answers_;
  mutable std::mutex mutex_;
  std::vector<CompletionRequest> requests_;
};

inline Gateway live_gateway(std::shared_ptr<ChatBackend> backend) {
  return Gateway(GatewayMode::Live, std::move(backend), nullptr);
}

// ---------------------------------------------------------------------------
// Generators for property tests. Seeded so failures reproduce.

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(range(0, static_cast<int>(v.size()) - 1))];
  }

  std::string from(std::string_view alphabet, int min_len, int max_len) {
    std::string s;
    const int n = range(min_len, max_len);
    for (int i = 0; i < n; ++i) s.push_back(alphabet[static_cast<std::size_t>(range(0, static_cast<int>(alphabet.size()) - 1))]);
    return s;
  }

  /// Identifier-like text: letters, digits, '_' and '-', at least one alphanumeric.
  std::string identifier_like() {
    static constexpr std::string_view kAll = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
    static constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::string s = from(kAll, 0, 14);
    s.insert(static_cast<std::size_t>(range(0, static_cast<int>(s.size()))), 1,
             kAlnum[static_cast<std::size_t>(range(0, static_cast<int>(kAlnum.size()) - 1))]);
    return s;
  }

  std::string lower_name() { return from("abcdefghijklmnopqrstuvwxyz", 1, 1) + from("abcdefghijklmnopqrstuvwxyz_0123456789", 0, 6); }
  std::string variable() { return from("ABCDEFGHIJKLMNOPQRSTUVWXYZ", 1, 1) + from("abcdefghijklmnopqrstuvwxyz0123456789", 0, 2); }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace predname::test

#include <fstream>

#include "predname/errors.hpp"
#include "predname/gateway.hpp"

namespace predname {

nlohmann::ordered_json FixtureRecord::to_json() const {
  nlohmann::ordered_json j;
  j["digest"] = digest;
  j["model_id"] = model_id;
  j["round_index"] = round_index;
  j["prompt_sha256"] = prompt_sha256;
  j["response_text"] = response_text;
  j["recorded_at"] = recorded_at;
  if (error) j["error"] = *error;
  return j;
}

FixtureRecord FixtureRecord::from_json(const nlohmann::json& j) {
  FixtureRecord r;
  try {
    r.digest = j.at("digest").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.round_index = j.at("round_index").get<int>();
    r.prompt_sha256 = j.value("prompt_sha256", "");
    r.response_text = j.value("response_text", "");
    r.recorded_at = j.value("recorded_at", "");
    if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FixtureError(std::string("malformed fixture record: ") + e.what());
  }
  return r;
}

FixtureStore::FixtureStore(std::filesystem::path path, bool writable)
    : path_(std::move(path)), writable_(writable) {
  if (!std::filesystem::exists(path_)) {
    if (!writable_) throw FixtureError("fixture file " + path_.string() + " does not exist");
    return;
  }
  std::ifstream in(path_);
  if (!in) throw FixtureError("cannot read fixture file " + path_.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FixtureError(path_.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
    FixtureRecord record = FixtureRecord::from_json(j);
    // A digest recorded twice keeps its first answer.
    if (index_.emplace(record.digest, records_.size()).second) records_.push_back(std::move(record));
  }
}

std::optional<FixtureRecord> FixtureStore::find(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(digest);
  if (it == index_.end()) return std::nullopt;
  return records_[it->second];
}

void FixtureStore::append(const FixtureRecord& record) {
  std::lock_guard lock(mutex_);
  if (!index_.emplace(record.digest, records_.size()).second) return;
  records_.push_back(record);
  if (!writable_ || path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw FixtureError("cannot append to fixture file " + path_.string());
  out << record.to_json().dump() << '\n';
}

std::size_t FixtureStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::vector<FixtureRecord> FixtureStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

}  // namespace predname

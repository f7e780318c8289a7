#include "mpi/replay_store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mpi/errors.hpp"
#include "mpi/hash.hpp"

namespace mpi {

using nlohmann::json;

namespace {

json decoding_json(const Decoding& d) {
  return json{{"temperature", d.temperature}, {"max_tokens", d.max_tokens}};
}

}  // namespace

std::string completion_key(const std::string& profile, const Decoding& decoding,
                           const std::string& prompt) {
  const json canonical = {{"profile", profile}, {"decoding", decoding_json(decoding)},
                          {"prompt", prompt}};
  return sha256_hex(canonical.dump());
}

ReplayStore::ReplayStore(std::filesystem::path path) : path_(std::move(path)) { load(); }

void ReplayStore::load() {
  std::ifstream in(*path_, std::ios::binary);
  if (!in) return;
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      // Torn tail: never committed, so not part of the store.
      needs_newline_repair_ = true;
      break;
    }
    ++line_no;
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    valid_bytes_ = pos;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
      const auto profile = rec.at("profile").get<std::string>();
      const auto prompt = rec.at("prompt").get<std::string>();
      const auto text = rec.at("text").get<std::string>();
      Decoding decoding;
      decoding.temperature = rec.at("decoding").at("temperature").get<double>();
      decoding.max_tokens = rec.at("decoding").at("max_tokens").get<int>();
      const auto key = rec.at("key_hash").get<std::string>();
      if (key != completion_key(profile, decoding, prompt)) {
        throw ConfigError(path_->string() + ":" + std::to_string(line_no) +
                          ": key_hash does not match record content");
      }
      entries_.emplace(key, text);
    } catch (const json::exception& e) {
      throw ConfigError(path_->string() + ":" + std::to_string(line_no) +
                        ": malformed replay record: " + e.what());
    }
  }
}

std::optional<std::string> ReplayStore::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ReplayStore::record(const std::string& profile, const Decoding& decoding,
                         const std::string& prompt, const std::string& text) {
  const std::string key = completion_key(profile, decoding, prompt);
  std::unique_lock lock(mutex_);
  if (entries_.count(key)) return;
  if (path_) {
    if (needs_newline_repair_) {
      std::filesystem::resize_file(*path_, valid_bytes_);
      needs_newline_repair_ = false;
    }
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    const json rec = {{"key_hash", key}, {"profile", profile}, {"prompt", prompt},
                      {"text", text},    {"decoding", decoding_json(decoding)}};
    const std::string line = rec.dump() + "\n";
    std::FILE* f = std::fopen(path_->string().c_str(), "ab");
    if (!f) throw ConfigError("cannot append to replay store " + path_->string());
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size();
    const bool flushed = std::fflush(f) == 0;
    std::fclose(f);
    if (!ok || !flushed) throw ConfigError("short write to replay store " + path_->string());
    valid_bytes_ += line.size();
  }
  entries_.emplace(key, text);
}

std::size_t ReplayStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace mpi

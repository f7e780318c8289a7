#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace mpi {

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 256;

  bool operator==(const Decoding&) const = default;
};

/// Hex SHA-256 over the canonical JSON of (profile name, decoding, prompt).
std::string completion_key(const std::string& profile, const Decoding& decoding,
                           const std::string& prompt);

/// Content-addressed log of completions backed by an append-only JSON-lines
/// file. Each line is one record:
///   {"decoding":{...},"key_hash":"...","profile":"...","prompt":"...","text":"..."}
///
/// A record becomes visible only once its full line, newline included, has been
/// written. A torn final line from an interrupted run is ignored on load and
/// truncated away before the next append.
class ReplayStore {
 public:
  /// In-memory store; nothing is persisted.
  ReplayStore() = default;
  /// Loads `path` if it exists. Throws ConfigError on corrupt interior lines or
  /// on records whose key_hash does not match their content.
  explicit ReplayStore(std::filesystem::path path);

  ReplayStore(const ReplayStore&) = delete;
  ReplayStore& operator=(const ReplayStore&) = delete;

  std::optional<std::string> lookup(const std::string& key) const;

  /// First write for a key wins; later writes for the same key are no-ops.
  void record(const std::string& profile, const Decoding& decoding, const std::string& prompt,
              const std::string& text);

  std::size_t size() const;
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  void load();

  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  bool needs_newline_repair_ = false;
  std::uintmax_t valid_bytes_ = 0;
};

}  // namespace mpi

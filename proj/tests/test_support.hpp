#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "mpi/gateway.hpp"
#include "mpi/inventory.hpp"

namespace mpi::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(MPI_FIXTURE_DIR) / name;
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(MPI_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("mpi-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
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

inline ModelProfile scripted_profile(PerTrait<int> levels,
                                     std::shared_ptr<const Inventory> inventory = nullptr,
                                     std::optional<std::string> echo = std::nullopt) {
  ModelProfile p;
  p.name = "scripted";
  p.kind = ProfileKind::Scripted;
  ScriptedPersona persona;
  persona.levels = levels;
  persona.inventory = std::move(inventory);
  persona.echo_portrait = std::move(echo);
  p.persona = std::move(persona);
  return p;
}

/// Backend returning a fixed reply and counting calls.
class FixedBackend : public Backend {
 public:
  explicit FixedBackend(std::string reply, std::atomic<int>* calls = nullptr)
      : reply_(std::move(reply)), calls_(calls) {}
  std::string generate(const std::string&) override {
    if (calls_) ++*calls_;
    return reply_;
  }

 private:
  std::string reply_;
  std::atomic<int>* calls_;
};

}  // namespace mpi::testing

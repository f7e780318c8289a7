#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mpi/errors.hpp"
#include "mpi/inventory.hpp"
#include "mpi/replay_store.hpp"

namespace mpi {

enum class ProfileKind { HttpCompletion, HttpChat, Scripted, Replay };

std::string profile_kind_name(ProfileKind kind);

/// Conditions a scripted respondent on its prompt: when the text ahead of the
/// item statement contains any trigger word (whole word, case-insensitive),
/// the respondent answers `dimension` at `level`.
struct PromptRule {
  Trait dimension = Trait::O;
  std::vector<std::string> triggers;
  int level = 3;
};

/// Deterministic respondent double: answers inventory items at fixed trait
/// levels and returns `echo_portrait` for everything else.
struct ScriptedPersona {
  PerTrait<int> levels{3, 3, 3, 3, 3};
  std::shared_ptr<const Inventory> inventory;
  std::optional<std::string> echo_portrait;
  std::vector<PromptRule> rules;

  void validate() const;
};

inline constexpr std::string_view kScriptedCannedReply = "I am a scripted respondent.";

struct ModelProfile {
  std::string name;
  ProfileKind kind = ProfileKind::Scripted;
  std::string endpoint;
  /// Remote model identifier sent in the request body (http kinds).
  std::string model;
  std::string template_id = "gpt35";
  Decoding decoding;
  std::string auth_env;
  int parallelism = 4;
  /// Replay store file. Replay kinds read it; http kinds record into it.
  std::optional<std::filesystem::path> store;
  /// Only for the scripted kind.
  std::optional<ScriptedPersona> persona;

  bool is_http() const {
    return kind == ProfileKind::HttpCompletion || kind == ProfileKind::HttpChat;
  }
  void validate() const;
};

struct RawCompletion {
  std::string prompt;
  std::string text;
  std::string model;
  bool cached = false;
};

RawCompletion scripted_complete(const ScriptedPersona& persona, const std::string& prompt);

/// Profiles file: JSON array of profile objects.
std::vector<ModelProfile> parse_profiles_json(std::string_view text);
std::vector<ModelProfile> load_profiles(const std::filesystem::path& path);

/// Inline forms accepted wherever a profile is named:
///   scripted:levels=3,3,5,3,3[;echo=TEXT]
///   replay:PATH[@NAME]   (NAME defaults to "replay")
/// Returns nullopt when `spec` is not an inline form.
std::optional<ModelProfile> parse_inline_profile(std::string_view spec);

/// Signals a failure worth retrying (transport error, HTTP 5xx).
class TransientError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// Produces raw text for one prompt. Implementations may be called
/// concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string generate(const std::string& prompt) = 0;
};

std::unique_ptr<Backend> make_http_backend(const ModelProfile& profile);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

/// Uniform completion front end over one profile: replay cache, retries with
/// exponential backoff, and a bound on in-flight calls.
class Gateway {
 public:
  /// Builds the backend implied by the profile kind.
  Gateway(ModelProfile profile, std::shared_ptr<ReplayStore> store);
  /// Uses a caller-supplied backend in place of the kind's own (replay kinds
  /// never call a backend).
  Gateway(ModelProfile profile, std::shared_ptr<ReplayStore> store,
          std::unique_ptr<Backend> backend);

  RawCompletion complete(const std::string& prompt);

  const ModelProfile& profile() const { return profile_; }
  void set_retry_policy(RetryPolicy policy) { retry_ = policy; }

 private:
  std::string call_with_retries(const std::string& prompt);

  class Slots {
   public:
    explicit Slots(int n) : free_(n) {}
    void acquire();
    void release();

   private:
    std::mutex mu_;
    std::condition_variable cv_;
    int free_;
  };

  ModelProfile profile_;
  std::shared_ptr<ReplayStore> store_;
  std::unique_ptr<Backend> backend_;
  RetryPolicy retry_;
  Slots slots_;
};

}  // namespace mpi

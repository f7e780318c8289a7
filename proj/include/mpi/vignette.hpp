#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mpi/gateway.hpp"
#include "mpi/personality_prompt.hpp"

namespace mpi {

inline constexpr std::string_view kVignetteQuestion =
    "Describe how you would feel and what you would do in the situation.";

struct VignetteContext {
  Trait dimension = Trait::O;
  std::string scenario;
  std::string question{kVignetteQuestion};
};

/// One scenario per dimension, in O, C, E, A, N order.
const std::vector<VignetteContext>& builtin_contexts();
const VignetteContext& builtin_context(Trait t);

enum class Condition { Positive, Neutral, Negative };

std::string condition_name(Condition c);
Condition parse_condition(std::string_view text);

struct Essay {
  std::string id;
  Trait dimension = Trait::O;
  Condition condition = Condition::Neutral;
  std::string text;
  std::string generator_model;
  std::string generator_method;  // "p2", "naive", "words" or "none"

  bool operator==(const Essay&) const = default;
};

/// Context / Premise / Q / A layout. The Context line is empty for neutral runs.
std::string vignette_prompt(const std::optional<PersonalityPrompt>& pp,
                            const VignetteContext& ctx);

/// Throws GatewayError("empty essay") on a blank completion.
Essay generate_essay(Gateway& gateway, const std::optional<PersonalityPrompt>& pp,
                     const VignetteContext& ctx);

struct Comparison {
  std::string item_id;
  Trait dimension = Trait::O;
  Polarity polarity = Polarity::Positive;
  std::string neutral_essay_id;
  std::string induced_essay_id;
  /// false: neutral essay shown as "Response 1"; true: induced essay first.
  bool presentation_flip = false;

  bool operator==(const Comparison&) const = default;
};

struct RatingSession {
  std::string id;
  std::uint64_t seed = 0;
  std::string status = "open";
  std::vector<Comparison> comparisons;

  const Comparison* find(std::string_view item_id) const;
  bool operator==(const RatingSession&) const = default;
};

/// Pairs each induced essay with its dimension's neutral essay: 10 binary
/// comparisons from 15 essays. Flips and order come from `seed`.
RatingSession build_questionnaire(const std::vector<Essay>& essays, std::uint64_t seed);

enum class Judgment { Increased, Decreased };

std::string judgment_name(Judgment j);
std::optional<Judgment> parse_judgment(std::string_view text);

struct RatingRecord {
  std::string session_id;
  std::string rater_id;
  std::string item_id;
  /// The induced essay relative to the neutral one on the item's dimension.
  Judgment judgment = Judgment::Increased;
  std::string ts;

  bool operator==(const RatingRecord&) const = default;
};

struct RateCell {
  std::size_t successes = 0;
  std::size_t total = 0;
  /// Empty when no ratings fall in the cell.
  std::optional<double> rate;
};

struct RateReport {
  std::string session_id;
  /// Indexed [trait][0 = positive, 1 = negative].
  PerTrait<std::array<RateCell, 2>> cells;

  const RateCell& at(Trait t, Polarity p) const {
    return cells[trait_index(t)][p == Polarity::Positive ? 0 : 1];
  }
};

/// Success means "increased" for positive items and "decreased" for negative
/// ones. Throws ConfigError for unknown items or repeated (rater, item) pairs.
RateReport success_rates(const RatingSession& session, const std::vector<RatingRecord>& ratings);

/// Append-only ratings log with (rater, item) uniqueness enforced on write.
class RatingStore {
 public:
  explicit RatingStore(std::filesystem::path path);

  RatingStore(const RatingStore&) = delete;
  RatingStore& operator=(const RatingStore&) = delete;

  /// Appends all records in a single write, or none of them when any
  /// (rater, item) pair already exists. Returns false on a duplicate.
  bool append(const std::vector<RatingRecord>& records);

  bool has_rater(const std::string& rater_id) const;
  std::vector<RatingRecord> records() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<RatingRecord> records_;
  std::set<std::pair<std::string, std::string>> keys_;
  std::set<std::string> raters_;
  std::uintmax_t valid_bytes_ = 0;
  bool torn_tail_ = false;
};

/// Files of one study session.
struct SessionDir {
  std::filesystem::path root;

  std::filesystem::path essays() const { return root / "essays.json"; }
  std::filesystem::path session() const { return root / "session.json"; }
  std::filesystem::path ratings() const { return root / "ratings.jsonl"; }
  std::filesystem::path report() const { return root / "report.json"; }
};

nlohmann::json to_json(const Essay& essay);
Essay essay_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RatingSession& session);
RatingSession session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RatingRecord& record);
RatingRecord rating_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RateReport& report);

std::vector<Essay> load_essays(const std::filesystem::path& path);
RatingSession load_session(const std::filesystem::path& path);

/// Canonical JSON text (sorted keys, two-space indent, trailing newline).
std::string canonical_dump(const nlohmann::json& j);
/// Writes via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mpi

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mpi/gateway.hpp"
#include "mpi/inventory.hpp"
#include "mpi/likert.hpp"
#include "mpi/personality_prompt.hpp"

namespace mpi {

/// Outcome of reading a Likert choice out of free text. Either `choice` is
/// set, or `reason` says why not ("no match", "ambiguous", "empty").
struct ParsedChoice {
  std::optional<Choice> choice;
  std::string reason;
  /// Offset just past the token that decided the choice.
  std::size_t token_end = 0;

  bool valid() const { return choice.has_value(); }
};

/// Reads the respondent's option out of a raw completion.
///
/// Precedence:
///   1. letter tokens in the leading clause of the first non-empty line:
///      "(X)", "X.", "X)", "X:" or a standalone capital X, for X in A-E;
///   2. a case-insensitive, whole-word match of a full option label anywhere;
///   3. otherwise invalid.
/// Two different letters at the deciding level make the answer ambiguous.
/// Never throws.
ParsedChoice parse_choice(std::string_view raw,
                          const std::array<std::string, 5>& option_labels = kLikertLabels);

/// Text following the deciding token, minus a restated option label.
std::optional<std::string> extract_explanation(std::string_view raw, const ParsedChoice& parsed,
                                               const std::array<std::string, 5>& option_labels =
                                                   kLikertLabels);

struct ItemResponse {
  std::string item_id;
  std::string raw;
  std::optional<Choice> parsed;
  std::string invalid_reason;
  std::optional<std::string> explanation;

  bool valid() const { return parsed.has_value(); }
};

ItemResponse make_response(std::string item_id, std::string raw, bool capture_explanation = false);

/// Mean and population standard deviation of one dimension's item scores.
/// Both are empty when no response for the dimension was valid.
struct TraitReport {
  Trait dimension = Trait::O;
  std::optional<double> mean;
  std::optional<double> sigma;
  std::size_t n_valid = 0;
  std::size_t n_invalid = 0;

  bool defined() const { return mean.has_value(); }
};

struct OceanReport {
  std::string model;
  std::string inventory;
  PerTrait<TraitReport> traits;
  std::optional<PersonalityPrompt> induction;

  const TraitReport& operator[](Trait t) const { return traits[trait_index(t)]; }
};

/// Throws ConfigError for responses naming items absent from `inv`.
OceanReport score_responses(const std::vector<ItemResponse>& responses, const Inventory& inv,
                            std::string model = {});

struct AdministerOptions {
  std::optional<std::string> persona_prefix;
  bool explain = false;
  double max_invalid_fraction = 0.2;
};

/// Asks every item of `inv` through `gateway`, up to the profile's parallelism
/// at once. Responses come back in inventory order. Throws GatewayError with
/// the failing item's id, or InvalidResponsesError past the threshold.
std::vector<ItemResponse> administer(Gateway& gateway, const Inventory& inv,
                                     const PromptTemplate& tpl,
                                     const AdministerOptions& options = {});

/// Per-dimension population statistics to compare against.
struct HumanReference {
  PerTrait<double> mean;
  PerTrait<double> sigma;
};

/// Averages over 619,150 IPIP-NEO-120 respondents.
const HumanReference& human_reference();

struct TraitDelta {
  double delta_mean = 0;
  double delta_sigma = 0;
  bool mean_within = false;
  bool sigma_within = false;
};

struct ClosenessThresholds {
  double mean = 0.1;
  double sigma = 0.1;
};

struct HumanComparison {
  PerTrait<TraitDelta> deltas;
  ClosenessThresholds thresholds;

  const TraitDelta& operator[](Trait t) const { return deltas[trait_index(t)]; }
  /// Dimensions whose mean and sigma are both within threshold.
  std::vector<Trait> close_dimensions() const;
};

/// Throws std::invalid_argument when a dimension is undefined in `report`.
HumanComparison compare_to_human(const OceanReport& report, const HumanReference& ref,
                                 ClosenessThresholds thresholds = {});

/// Rounds to four decimals for serialization.
double round4(double v);

nlohmann::json to_json(const OceanReport& report);
nlohmann::json to_json(const HumanComparison& comparison);

}  // namespace mpi

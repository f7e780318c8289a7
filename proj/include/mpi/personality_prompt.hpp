#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpi/trait.hpp"

namespace mpi {

struct InductionTarget {
  Trait dimension = Trait::O;
  Polarity polarity = Polarity::Positive;

  bool operator==(const InductionTarget&) const = default;
};

enum class InductionMethod { P2, Naive, Words };

std::string method_name(InductionMethod m);
InductionMethod parse_method(std::string_view text);

/// A personality-inducing prefix plus the intermediate artifacts that
/// produced it.
struct PersonalityPrompt {
  InductionTarget target;
  InductionMethod method = InductionMethod::Naive;
  std::string naive_text;
  std::vector<std::string> keywords;
  /// Model-written description; empty for the naive and words methods.
  std::string portrait;
  /// The text actually prepended to downstream tasks.
  std::string final_prefix;

  void validate() const;
  bool operator==(const PersonalityPrompt&) const = default;
};

/// Condition label used by vignette essays: "positive" or "negative".
inline std::string condition_of(const PersonalityPrompt& pp) {
  return polarity_name(pp.target.polarity);
}

nlohmann::json to_json(const PersonalityPrompt& pp);
PersonalityPrompt personality_prompt_from_json(const nlohmann::json& j);
PersonalityPrompt load_personality_prompt(const std::filesystem::path& path);

}  // namespace mpi

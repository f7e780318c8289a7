#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpi/gateway.hpp"
#include "mpi/inventory.hpp"
#include "mpi/personality_prompt.hpp"

namespace mpi {

/// Trait-descriptive vocabulary per dimension.
struct LexiconEntry {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  /// Pool for the word-search baseline.
  std::vector<std::string> candidates;
};

struct TraitLexicon {
  PerTrait<LexiconEntry> entries;

  const LexiconEntry& operator[](Trait t) const { return entries[trait_index(t)]; }
  LexiconEntry& operator[](Trait t) { return entries[trait_index(t)]; }
  void validate() const;
};

/// Positive entries are the standard Big Five adjective markers, e.g.
/// Extraversion: active, assertive, energetic, enthusiastic, outgoing, talkative.
const TraitLexicon& default_lexicon();

/// Overlays a lexicon file on the defaults. Fields present in the file replace
/// the default list for that dimension; an empty "negative" list makes
/// negative keyword selection ask the model for antonyms.
TraitLexicon parse_lexicon_json(std::string_view text);
TraitLexicon load_lexicon(const std::filesystem::path& path);

/// "a" or "an" by the word's initial vowel.
std::string indefinite_article(std::string_view word);

/// "You are a/an X person."
std::string you_are_prompt(std::string_view adjective);

/// Positive targets use open / conscientious / extraversive / agreeable /
/// neurotic; negative targets use the lexicon's first negative adjective.
std::string naive_prompt(const InductionTarget& target, const TraitLexicon& lex);

/// Prompt sent when asking the model for antonyms of `words`.
std::string antonym_request(const std::vector<std::string>& words);

/// Splits a comma or newline separated reply into lowercase, deduplicated words.
std::vector<std::string> parse_word_list(std::string_view reply);

/// Positive: the lexicon's positive adjectives. Negative: the lexicon's
/// negatives, or antonyms of the positives generated by `gateway` (one call)
/// when the lexicon has none.
std::vector<std::string> select_keywords(const InductionTarget& target, const TraitLexicon& lex,
                                         Gateway* gateway);

/// "Describe in a few short sentences a person who is {keywords}."
std::string portrait_request(const std::vector<std::string>& keywords);

std::string generate_portrait(Gateway& gateway, const std::vector<std::string>& keywords,
                              const InductionTarget& target);

/// naive prompt -> keyword prompt -> self-generated portrait. The portrait
/// becomes the final prefix.
PersonalityPrompt p2_chain(Gateway& gateway, const InductionTarget& target,
                           const TraitLexicon& lex);

/// Naive baseline packaged as a PersonalityPrompt.
PersonalityPrompt naive_personality(const InductionTarget& target, const TraitLexicon& lex);

/// Words baseline packaged as a PersonalityPrompt: "You are a/an w1, w2 and w3 person."
PersonalityPrompt words_personality(const InductionTarget& target, const TraitLexicon& lex,
                                    const std::vector<std::string>& words);

/// prefix, blank line, context, blank line, question. An empty context is
/// dropped along with its separator.
std::string assemble_prompt(const PersonalityPrompt& pp, std::string_view context,
                            std::string_view question);

struct WordScore {
  std::string word;
  /// Empty when the administration for this word was unusable.
  std::optional<double> mean;
  std::size_t input_rank = 0;
};

struct WordSearchResult {
  Trait dimension = Trait::O;
  std::vector<std::string> top;
  /// One row per candidate in input order.
  std::vector<WordScore> table;
};

struct WordSearchOptions {
  std::size_t k = 3;
  double max_invalid_fraction = 0.2;
};

/// Scores each candidate by administering `inventory` under "You are a/an
/// {w} person." and keeps the k highest target-dimension means. Ties go to the
/// earlier candidate.
WordSearchResult word_search(Gateway& gateway, const Inventory& inventory,
                             const PromptTemplate& tpl, Trait dimension,
                             const std::vector<std::string>& candidates,
                             const WordSearchOptions& options = {});

nlohmann::json to_json(const WordSearchResult& result);

}  // namespace mpi

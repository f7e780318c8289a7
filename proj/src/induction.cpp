#include "mpi/induction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mpi/errors.hpp"
#include "mpi/scoring.hpp"

namespace mpi {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join(const std::vector<std::string>& words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

constexpr std::array<std::string_view, 5> kNaiveAdjectives = {
    "open", "conscientious", "extraversive", "agreeable", "neurotic"};

template <typename Fn>
auto run_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const GatewayError& e) {
    throw GatewayError("p2 stage '" + std::string(stage) + "': " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("p2 stage '" + std::string(stage) + "': " + e.what());
  }
}

}  // namespace

void TraitLexicon::validate() const {
  for (Trait t : kAllTraits) {
    if ((*this)[t].positive.empty()) {
      throw ConfigError("lexicon has no positive adjectives for " + trait_symbol(t));
    }
  }
}

const TraitLexicon& default_lexicon() {
  static const TraitLexicon lex = [] {
    TraitLexicon l;
    l[Trait::O] = {{"artistic", "curious", "imaginative", "insightful", "original"},
                   {"conventional", "uncurious", "unimaginative", "unoriginal", "narrow-minded"},
                   {"artistic", "curious", "imaginative", "insightful", "original", "creative",
                    "inventive", "adventurous", "intellectual", "unconventional"}};
    l[Trait::C] = {{"efficient", "organized", "planful", "reliable", "responsible", "thorough"},
                   {"careless", "disorganized", "unreliable", "irresponsible", "sloppy"},
                   {"efficient", "organized", "planful", "reliable", "responsible", "thorough",
                    "disciplined", "diligent", "careful", "punctual"}};
    l[Trait::E] = {{"active", "assertive", "energetic", "enthusiastic", "outgoing", "talkative"},
                   {"introverted", "quiet", "reserved", "withdrawn", "passive"},
                   {"active", "assertive", "energetic", "enthusiastic", "outgoing", "talkative",
                    "sociable", "friendly", "bold", "cheerful"}};
    l[Trait::A] = {{"appreciative", "forgiving", "generous", "kind", "sympathetic"},
                   {"critical", "unforgiving", "selfish", "unkind", "unsympathetic"},
                   {"appreciative", "forgiving", "generous", "kind", "sympathetic", "trusting",
                    "helpful", "cooperative", "warm", "considerate"}};
    l[Trait::N] = {{"anxious", "self-pitying", "tense", "touchy", "unstable", "worrying"},
                   {"emotionally stable", "calm", "relaxed", "secure", "even-tempered"},
                   {"anxious", "self-pitying", "tense", "touchy", "unstable", "worrying",
                    "moody", "nervous", "insecure", "irritable"}};
    return l;
  }();
  return lex;
}

TraitLexicon parse_lexicon_json(std::string_view text) {
  TraitLexicon lex = default_lexicon();
  try {
    const auto doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("lexicon file must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      const auto t = parse_trait(key);
      if (!t) throw ConfigError("lexicon: unknown dimension '" + key + "'");
      auto& entry = lex[*t];
      if (value.contains("positive")) entry.positive = value.at("positive").get<std::vector<std::string>>();
      if (value.contains("negative")) entry.negative = value.at("negative").get<std::vector<std::string>>();
      if (value.contains("candidates")) {
        entry.candidates = value.at("candidates").get<std::vector<std::string>>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("lexicon parse error: ") + e.what());
  }
  lex.validate();
  return lex;
}

TraitLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_lexicon_json(ss.str());
}

std::string indefinite_article(std::string_view word) {
  if (word.empty()) return "a";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  return std::string_view("aeiou").find(c) != std::string_view::npos ? "an" : "a";
}

std::string you_are_prompt(std::string_view adjective) {
  return "You are " + indefinite_article(adjective) + " " + std::string(adjective) + " person.";
}

std::string naive_prompt(const InductionTarget& target, const TraitLexicon& lex) {
  if (target.polarity == Polarity::Positive) {
    return you_are_prompt(kNaiveAdjectives[trait_index(target.dimension)]);
  }
  const auto& negatives = lex[target.dimension].negative;
  if (negatives.empty()) {
    throw ConfigError("missing adjective entry: no negative adjective for " +
                      trait_symbol(target.dimension));
  }
  return you_are_prompt(negatives.front());
}

std::string antonym_request(const std::vector<std::string>& words) {
  return "Give one antonym for each of the following words, as a comma-separated list: " +
         join(words, ", ") + ".";
}

std::vector<std::string> parse_word_list(std::string_view reply) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  std::string token;
  auto flush = [&] {
    std::string w = trim(token);
    token.clear();
    // Drop list decorations such as "1." or "- ".
    while (!w.empty() && (std::isdigit(static_cast<unsigned char>(w.front())) || w.front() == '-' ||
                          w.front() == '*' || w.front() == '.' || w.front() == ')')) {
      w.erase(w.begin());
    }
    w = trim(w);
    while (!w.empty() && (w.back() == '.' || w.back() == ';')) w.pop_back();
    w = trim(w);
    if (w.empty()) return;
    w = lower(w);
    if (seen.insert(w).second) words.push_back(w);
  };
  for (char c : reply) {
    if (c == ',' || c == '\n') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return words;
}

std::vector<std::string> select_keywords(const InductionTarget& target, const TraitLexicon& lex,
                                         Gateway* gateway) {
  const auto& entry = lex[target.dimension];
  if (entry.positive.empty()) {
    throw ConfigError("lexicon has no positive adjectives for " + trait_symbol(target.dimension));
  }
  if (target.polarity == Polarity::Positive) return entry.positive;
  if (!entry.negative.empty()) return entry.negative;
  if (!gateway) {
    throw ConfigError("negative keywords for " + trait_symbol(target.dimension) +
                      " need a model to generate antonyms");
  }
  const auto reply = gateway->complete(antonym_request(entry.positive));
  auto words = parse_word_list(reply.text);
  if (words.size() < 3) {
    throw GatewayError("antonym reply yielded " + std::to_string(words.size()) +
                       " words, need at least 3");
  }
  return words;
}

std::string portrait_request(const std::vector<std::string>& keywords) {
  return "Describe in a few short sentences a person who is " + join(keywords, ", ") + ".";
}

std::string generate_portrait(Gateway& gateway, const std::vector<std::string>& keywords,
                              const InductionTarget&) {
  if (keywords.empty()) throw ConfigError("portrait needs at least one keyword");
  const auto reply = gateway.complete(portrait_request(keywords));
  std::string portrait = trim(reply.text);
  if (portrait.empty()) throw GatewayError("empty portrait");
  return portrait;
}

PersonalityPrompt p2_chain(Gateway& gateway, const InductionTarget& target,
                           const TraitLexicon& lex) {
  PersonalityPrompt pp;
  pp.target = target;
  pp.method = InductionMethod::P2;
  pp.naive_text = run_stage("naive", [&] { return naive_prompt(target, lex); });
  pp.keywords = run_stage("keywords", [&] { return select_keywords(target, lex, &gateway); });
  pp.portrait = run_stage("portrait", [&] { return generate_portrait(gateway, pp.keywords, target); });
  pp.final_prefix = pp.portrait;
  return pp;
}

PersonalityPrompt naive_personality(const InductionTarget& target, const TraitLexicon& lex) {
  PersonalityPrompt pp;
  pp.target = target;
  pp.method = InductionMethod::Naive;
  pp.naive_text = naive_prompt(target, lex);
  pp.final_prefix = pp.naive_text;
  return pp;
}

PersonalityPrompt words_personality(const InductionTarget& target, const TraitLexicon& lex,
                                    const std::vector<std::string>& words) {
  if (words.empty()) throw ConfigError("words baseline needs at least one word");
  PersonalityPrompt pp;
  pp.target = target;
  pp.method = InductionMethod::Words;
  pp.naive_text = naive_prompt(target, lex);
  pp.keywords = words;
  std::string list;
  if (words.size() == 1) {
    list = words.front();
  } else {
    std::vector<std::string> head(words.begin(), words.end() - 1);
    list = join(head, ", ") + " and " + words.back();
  }
  pp.final_prefix = you_are_prompt(list);
  return pp;
}

std::string assemble_prompt(const PersonalityPrompt& pp, std::string_view context,
                            std::string_view question) {
  if (question.empty()) throw ConfigError("empty question");
  if (pp.final_prefix.empty()) throw ConfigError("empty personality prefix");
  std::string out = pp.final_prefix;
  out += "\n\n";
  if (!context.empty()) {
    out += context;
    out += "\n\n";
  }
  out += question;
  return out;
}

WordSearchResult word_search(Gateway& gateway, const Inventory& inventory,
                             const PromptTemplate& tpl, Trait dimension,
                             const std::vector<std::string>& candidates,
                             const WordSearchOptions& options) {
  if (options.k < 1) throw ConfigError("k must be >= 1");
  if (candidates.empty()) throw ConfigError("word search needs at least one candidate");
  if (options.k > candidates.size()) {
    throw ConfigError("k (" + std::to_string(options.k) + ") exceeds the " +
                      std::to_string(candidates.size()) + " candidates");
  }
  if (item_pool(inventory, dimension).empty()) {
    throw ConfigError("inventory '" + inventory.name() + "' has no items for " +
                      trait_symbol(dimension));
  }

  WordSearchResult result;
  result.dimension = dimension;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    WordScore row{candidates[i], std::nullopt, i};
    AdministerOptions admin;
    admin.persona_prefix = you_are_prompt(candidates[i]);
    admin.max_invalid_fraction = options.max_invalid_fraction;
    try {
      const auto responses = administer(gateway, inventory, tpl, admin);
      row.mean = score_responses(responses, inventory)[dimension].mean;
    } catch (const InvalidResponsesError&) {
      // Unusable candidate; stays unscored.
    }
    result.table.push_back(std::move(row));
  }

  std::vector<const WordScore*> ranked;
  for (const auto& row : result.table) {
    if (row.mean) ranked.push_back(&row);
  }
  if (ranked.empty()) throw InvalidResponsesError(candidates.size(), candidates.size());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const WordScore* a, const WordScore* b) { return *a->mean > *b->mean; });
  const std::size_t take = std::min(options.k, ranked.size());
  for (std::size_t i = 0; i < take; ++i) result.top.push_back(ranked[i]->word);
  return result;
}

json to_json(const WordSearchResult& result) {
  json table = json::array();
  for (const auto& row : result.table) {
    table.push_back({{"word", row.word},
                     {"mean", row.mean ? json(round4(*row.mean)) : json(nullptr)},
                     {"input_rank", row.input_rank}});
  }
  return json{{"dimension", trait_symbol(result.dimension)}, {"top", result.top}, {"table", table}};
}

}  // namespace mpi

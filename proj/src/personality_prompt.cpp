#include "mpi/personality_prompt.hpp"

#include <fstream>
#include <sstream>

#include "mpi/errors.hpp"

namespace mpi {

using nlohmann::json;

std::string method_name(InductionMethod m) {
  switch (m) {
    case InductionMethod::P2:
      return "p2";
    case InductionMethod::Naive:
      return "naive";
    case InductionMethod::Words:
      return "words";
  }
  return "naive";
}

InductionMethod parse_method(std::string_view text) {
  if (text == "p2") return InductionMethod::P2;
  if (text == "naive") return InductionMethod::Naive;
  if (text == "words") return InductionMethod::Words;
  throw ConfigError("unknown induction method '" + std::string(text) + "'");
}

void PersonalityPrompt::validate() const {
  if (final_prefix.empty()) throw ConfigError("personality prompt has an empty final_prefix");
  if (method == InductionMethod::P2 && portrait.empty()) {
    throw ConfigError("p2 personality prompt has an empty portrait");
  }
}

json to_json(const PersonalityPrompt& pp) {
  return json{{"target",
               {{"dimension", trait_symbol(pp.target.dimension)},
                {"polarity", polarity_symbol(pp.target.polarity)}}},
              {"method", method_name(pp.method)},
              {"naive_text", pp.naive_text},
              {"keywords", pp.keywords},
              {"portrait", pp.portrait},
              {"final_prefix", pp.final_prefix}};
}

PersonalityPrompt personality_prompt_from_json(const json& j) {
  PersonalityPrompt pp;
  try {
    const auto& target = j.at("target");
    const auto dim = parse_trait(target.at("dimension").get<std::string>());
    const auto pol = parse_polarity(target.at("polarity").get<std::string>());
    if (!dim || !pol) throw ConfigError("personality prompt has a bad target");
    pp.target = {*dim, *pol};
    pp.method = parse_method(j.at("method").get<std::string>());
    pp.naive_text = j.value("naive_text", std::string{});
    pp.keywords = j.value("keywords", std::vector<std::string>{});
    pp.portrait = j.value("portrait", std::string{});
    pp.final_prefix = j.at("final_prefix").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed personality prompt: ") + e.what());
  }
  pp.validate();
  return pp;
}

PersonalityPrompt load_personality_prompt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return personality_prompt_from_json(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace mpi

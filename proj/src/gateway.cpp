#include "mpi/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mpi/likert.hpp"

namespace mpi {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'';
}

bool contains_word(const std::string& lowered_haystack, const std::string& word) {
  const std::string needle = lower(word);
  if (needle.empty()) return false;
  for (auto pos = lowered_haystack.find(needle); pos != std::string::npos;
       pos = lowered_haystack.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(lowered_haystack[pos - 1]);
    const auto end = pos + needle.size();
    const bool right_ok = end >= lowered_haystack.size() || !is_word_char(lowered_haystack[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

ProfileKind parse_kind(const std::string& s) {
  if (s == "http_completion") return ProfileKind::HttpCompletion;
  if (s == "http_chat") return ProfileKind::HttpChat;
  if (s == "scripted") return ProfileKind::Scripted;
  if (s == "replay") return ProfileKind::Replay;
  throw ConfigError("unknown profile kind '" + s + "'");
}

PerTrait<int> parse_levels_json(const json& j) {
  PerTrait<int> levels{};
  if (j.is_array()) {
    if (j.size() != 5) throw ConfigError("levels must list five values in O,C,E,A,N order");
    for (std::size_t i = 0; i < 5; ++i) levels[i] = j[i].get<int>();
    return levels;
  }
  if (j.is_object()) {
    for (Trait t : kAllTraits) {
      const auto key = trait_symbol(t);
      if (!j.contains(key)) throw ConfigError("levels missing dimension " + key);
      levels[trait_index(t)] = j.at(key).get<int>();
    }
    return levels;
  }
  throw ConfigError("levels must be an array or an object");
}

PerTrait<int> parse_levels_text(std::string_view text) {
  PerTrait<int> levels{};
  std::size_t i = 0;
  std::string token;
  std::istringstream in{std::string(text)};
  while (std::getline(in, token, ',')) {
    if (i >= 5) throw ConfigError("levels must list exactly five values");
    try {
      std::size_t used = 0;
      levels[i] = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("bad level value '" + token + "'");
    }
    ++i;
  }
  if (i != 5) throw ConfigError("levels must list exactly five values");
  return levels;
}

ModelProfile profile_from_json(const json& j) {
  ModelProfile p;
  try {
    p.name = j.at("name").get<std::string>();
    p.kind = parse_kind(j.at("kind").get<std::string>());
    p.endpoint = j.value("endpoint", std::string{});
    p.model = j.value("model", std::string{});
    p.template_id = j.value("template_id", std::string("gpt35"));
    p.auth_env = j.value("auth_env", std::string{});
    p.parallelism = j.value("parallelism", 4);
    if (j.contains("decoding")) {
      const auto& d = j.at("decoding");
      p.decoding.temperature = d.value("temperature", 0.0);
      p.decoding.max_tokens = d.value("max_tokens", 256);
    }
    if (j.contains("store")) p.store = j.at("store").get<std::string>();
    if (p.kind == ProfileKind::Scripted) {
      ScriptedPersona persona;
      if (j.contains("levels")) persona.levels = parse_levels_json(j.at("levels"));
      if (j.contains("echo_portrait")) {
        persona.echo_portrait = j.at("echo_portrait").get<std::string>();
      }
      p.persona = std::move(persona);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed profile: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace

std::string profile_kind_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::HttpCompletion:
      return "http_completion";
    case ProfileKind::HttpChat:
      return "http_chat";
    case ProfileKind::Scripted:
      return "scripted";
    case ProfileKind::Replay:
      return "replay";
  }
  return "scripted";
}

void ScriptedPersona::validate() const {
  for (Trait t : kAllTraits) {
    const int level = levels[trait_index(t)];
    if (level < 1 || level > 5) {
      throw ConfigError("scripted level for " + trait_symbol(t) + " must be in [1,5], got " +
                        std::to_string(level));
    }
  }
  for (const auto& rule : rules) {
    if (rule.level < 1 || rule.level > 5) throw ConfigError("prompt rule level must be in [1,5]");
  }
}

void ModelProfile::validate() const {
  if (name.empty()) throw ConfigError("profile without a name");
  if (decoding.temperature < 0) throw ConfigError("profile '" + name + "': temperature must be >= 0");
  if (decoding.max_tokens <= 0) throw ConfigError("profile '" + name + "': max_tokens must be positive");
  if (parallelism <= 0) throw ConfigError("profile '" + name + "': parallelism must be positive");
  if (is_http()) {
    if (endpoint.empty()) throw ConfigError("profile '" + name + "': http kinds need an endpoint");
    if (auth_env.empty()) throw ConfigError("profile '" + name + "': http kinds need auth_env");
  }
  if (kind == ProfileKind::Scripted) {
    if (!persona) throw ConfigError("profile '" + name + "': scripted kind needs a persona");
    persona->validate();
  }
}

RawCompletion scripted_complete(const ScriptedPersona& persona, const std::string& prompt) {
  RawCompletion out{prompt, {}, "scripted", false};

  const InventoryItem* matched = nullptr;
  std::size_t matched_pos = std::string::npos;
  std::size_t matched_len = 0;
  if (persona.inventory) {
    for (const auto& item : persona.inventory->items()) {
      const std::string sentence = statement_sentence(item);
      const auto pos = prompt.find(sentence);
      if (pos != std::string::npos && sentence.size() > matched_len) {
        matched = &item;
        matched_pos = pos;
        matched_len = sentence.size();
      }
    }
  }

  if (!matched) {
    out.text = persona.echo_portrait.value_or(std::string(kScriptedCannedReply));
    return out;
  }

  PerTrait<int> levels = persona.levels;
  const std::string prefix = lower(std::string_view(prompt).substr(0, matched_pos));
  for (const auto& rule : persona.rules) {
    const bool hit = std::any_of(rule.triggers.begin(), rule.triggers.end(),
                                 [&](const std::string& w) { return contains_word(prefix, w); });
    if (hit) levels[trait_index(rule.dimension)] = rule.level;
  }
  const int level = levels[trait_index(matched->dimension)];
  if (level < 1 || level > 5) {
    throw GatewayError("scripted persona has no valid level for " + trait_symbol(matched->dimension));
  }
  out.text = option_text(choice_for_level(level, matched->key));
  return out;
}

std::vector<ModelProfile> parse_profiles_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("profiles parse error: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("profiles file must be a JSON array");
  std::vector<ModelProfile> profiles;
  for (const auto& entry : doc) profiles.push_back(profile_from_json(entry));
  return profiles;
}

std::vector<ModelProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open profiles file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profiles_json(ss.str());
}

std::optional<ModelProfile> parse_inline_profile(std::string_view spec) {
  constexpr std::string_view kScripted = "scripted:";
  constexpr std::string_view kReplay = "replay:";
  if (spec.substr(0, kScripted.size()) == kScripted) {
    ModelProfile p;
    p.name = "scripted";
    p.kind = ProfileKind::Scripted;
    ScriptedPersona persona;
    std::string rest(spec.substr(kScripted.size()));
    std::istringstream in(rest);
    std::string part;
    while (std::getline(in, part, ';')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw ConfigError("inline scripted option needs key=value: " + part);
      const std::string key = part.substr(0, eq);
      const std::string value = part.substr(eq + 1);
      if (key == "levels") {
        persona.levels = parse_levels_text(value);
      } else if (key == "echo") {
        persona.echo_portrait = value;
      } else {
        throw ConfigError("unknown inline scripted option '" + key + "'");
      }
    }
    p.persona = std::move(persona);
    p.validate();
    return p;
  }
  if (spec.substr(0, kReplay.size()) == kReplay) {
    ModelProfile p;
    p.kind = ProfileKind::Replay;
    std::string rest(spec.substr(kReplay.size()));
    p.name = "replay";
    if (const auto at = rest.rfind('@'); at != std::string::npos) {
      p.name = rest.substr(at + 1);
      rest = rest.substr(0, at);
    }
    if (rest.empty()) throw ConfigError("replay profile needs a store path");
    p.store = rest;
    p.validate();
    return p;
  }
  return std::nullopt;
}

void Gateway::Slots::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void Gateway::Slots::release() {
  {
    std::lock_guard lock(mu_);
    ++free_;
  }
  cv_.notify_one();
}

Gateway::Gateway(ModelProfile profile, std::shared_ptr<ReplayStore> store)
    : Gateway(profile, std::move(store),
              profile.is_http() ? make_http_backend(profile) : nullptr) {}

Gateway::Gateway(ModelProfile profile, std::shared_ptr<ReplayStore> store,
                 std::unique_ptr<Backend> backend)
    : profile_(std::move(profile)),
      store_(std::move(store)),
      backend_(std::move(backend)),
      slots_(profile_.parallelism) {
  profile_.validate();
  if (profile_.kind == ProfileKind::Replay && !store_) {
    throw ConfigError("replay profile '" + profile_.name + "' has no store");
  }
}

RawCompletion Gateway::complete(const std::string& prompt) {
  if (profile_.kind == ProfileKind::Scripted && !backend_) {
    auto out = scripted_complete(*profile_.persona, prompt);
    out.model = profile_.name;
    return out;
  }

  const std::string key = completion_key(profile_.name, profile_.decoding, prompt);
  if (store_) {
    if (auto hit = store_->lookup(key)) return {prompt, *hit, profile_.name, true};
  }
  if (profile_.kind == ProfileKind::Replay) {
    throw GatewayError("replay miss for profile '" + profile_.name + "' (key " + key.substr(0, 12) + ")");
  }
  if (!backend_) throw GatewayError("profile '" + profile_.name + "' has no backend");

  slots_.acquire();
  std::string text;
  try {
    text = call_with_retries(prompt);
  } catch (...) {
    slots_.release();
    throw;
  }
  slots_.release();

  if (store_) store_->record(profile_.name, profile_.decoding, prompt, text);
  return {prompt, std::move(text), profile_.name, false};
}

std::string Gateway::call_with_retries(const std::string& prompt) {
  auto backoff = retry_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return backend_->generate(prompt);
    } catch (const TransientError& e) {
      if (attempt >= retry_.max_retries) {
        throw GatewayError("profile '" + profile_.name + "' failed after " +
                           std::to_string(attempt + 1) + " attempts: " + e.what());
      }
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace mpi

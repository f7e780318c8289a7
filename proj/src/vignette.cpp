#include "mpi/vignette.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "mpi/errors.hpp"
#include "mpi/hash.hpp"
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

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string essay_id(Trait t, Condition c) { return trait_symbol(t) + "-" + condition_name(c); }

Trait trait_field(const json& j, const char* key) {
  auto t = parse_trait(j.at(key).get<std::string>());
  if (!t) throw ConfigError(std::string("bad dimension in field ") + key);
  return *t;
}

// Bounded draw from raw mt19937_64 output, which unlike the standard
// distributions is identical across standard library implementations.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace

const std::vector<VignetteContext>& builtin_contexts() {
  static const std::vector<VignetteContext> contexts = {
      {Trait::O,
       "You have won an Air Canada paid vacation package for one person to any destination "
       "worldwide. Your package includes round-trip plane tickets, accommodations for any type of "
       "lodging, and $5,000 spending money. Assuming that you were available to go, where would "
       "you choose to go and why?"},
      {Trait::C,
       "You're working alone late at the office, and you notice a strange smell and a hazy mist "
       "hanging in the corridor air. You suspect it's some gas or vapor leak from some equipment "
       "or machinery in the building. You have no idea whether the leaked vapor is hazardous. As "
       "honestly as possible, describe what you would do in this situation."},
      {Trait::E,
       "Your friend wants you to attend an important party to which he/she has been invited. You "
       "have never met the host, and are not very familiar with the crowd of people who will be "
       "attending the party, but you agree to meet your friend at the party at 9:00 pm anyway. "
       "When you arrive there, you realize that your friend is late. How would you feel, and what "
       "would you do while you waited for your friend?"},
      {Trait::A,
       "Your housemate decides to paint her bedroom a new color. One night, when you come home "
       "from class, you discover that she also painted your room in the same color because she "
       "had paint left over and didn't want it to go to waste. As realistically as possible, "
       "describe how you would feel and how you would you handle the situation."},
      {Trait::N,
       "You have developed an email friendship with someone. In your latest email, you ask your "
       "friend a more personal question. Your friend usually replies quite promptly but has taken "
       "unusually long to reply to your latest questions. Discuss how you would interpret this "
       "long period of silence, how you would react, and what you would do about it?"},
  };
  return contexts;
}

const VignetteContext& builtin_context(Trait t) { return builtin_contexts()[trait_index(t)]; }

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::Positive:
      return "positive";
    case Condition::Neutral:
      return "neutral";
    case Condition::Negative:
      return "negative";
  }
  return "neutral";
}

Condition parse_condition(std::string_view text) {
  if (text == "positive") return Condition::Positive;
  if (text == "neutral") return Condition::Neutral;
  if (text == "negative") return Condition::Negative;
  throw ConfigError("unknown condition '" + std::string(text) + "'");
}

std::string vignette_prompt(const std::optional<PersonalityPrompt>& pp, const VignetteContext& ctx) {
  std::string out = "Context:";
  if (pp && !pp->final_prefix.empty()) out += " " + pp->final_prefix;
  out += "\nPremise: " + ctx.scenario;
  out += "\nQ: " + ctx.question;
  out += "\nA:";
  return out;
}

Essay generate_essay(Gateway& gateway, const std::optional<PersonalityPrompt>& pp,
                     const VignetteContext& ctx) {
  const auto completion = gateway.complete(vignette_prompt(pp, ctx));
  Essay essay;
  essay.dimension = ctx.dimension;
  essay.condition = !pp ? Condition::Neutral
                        : (pp->target.polarity == Polarity::Positive ? Condition::Positive
                                                                     : Condition::Negative);
  essay.id = essay_id(essay.dimension, essay.condition);
  essay.text = trim(completion.text);
  if (essay.text.empty()) throw GatewayError("empty essay for " + essay.id);
  essay.generator_model = gateway.profile().name;
  essay.generator_method = pp ? method_name(pp->method) : "none";
  return essay;
}

const Comparison* RatingSession::find(std::string_view item_id) const {
  auto it = std::find_if(comparisons.begin(), comparisons.end(),
                         [&](const Comparison& c) { return c.item_id == item_id; });
  return it == comparisons.end() ? nullptr : &*it;
}

RatingSession build_questionnaire(const std::vector<Essay>& essays, std::uint64_t seed) {
  std::map<std::pair<Trait, Condition>, const Essay*> cells;
  for (const auto& e : essays) {
    if (e.text.empty()) throw ConfigError("essay '" + e.id + "' is empty");
    if (!cells.emplace(std::make_pair(e.dimension, e.condition), &e).second) {
      throw ConfigError("duplicate essay for cell " + trait_symbol(e.dimension) + "-" +
                        condition_name(e.condition));
    }
  }
  for (Trait t : kAllTraits) {
    for (Condition c : {Condition::Positive, Condition::Neutral, Condition::Negative}) {
      if (!cells.count({t, c})) {
        throw ConfigError("missing essay for cell " + trait_symbol(t) + "-" + condition_name(c));
      }
    }
  }

  std::mt19937_64 rng(seed);
  RatingSession session;
  session.seed = seed;
  for (Trait t : kAllTraits) {
    for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
      const Condition induced = p == Polarity::Positive ? Condition::Positive : Condition::Negative;
      Comparison c;
      c.dimension = t;
      c.polarity = p;
      c.neutral_essay_id = cells.at({t, Condition::Neutral})->id;
      c.induced_essay_id = cells.at({t, induced})->id;
      c.presentation_flip = (rng() & 1U) != 0;
      session.comparisons.push_back(std::move(c));
    }
  }
  for (std::size_t i = session.comparisons.size() - 1; i > 0; --i) {
    std::swap(session.comparisons[i], session.comparisons[bounded(rng, i + 1)]);
  }
  for (std::size_t i = 0; i < session.comparisons.size(); ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "q%02zu", i + 1);
    session.comparisons[i].item_id = buf;
  }

  // Cell order, so the id does not depend on how the essays were listed.
  json fingerprint = json::array();
  for (const auto& [cell, e] : cells) fingerprint.push_back(to_json(*e));
  session.id = "s-" + sha256_hex(fingerprint.dump() + "#" + std::to_string(seed)).substr(0, 12);
  return session;
}

std::string judgment_name(Judgment j) { return j == Judgment::Increased ? "increased" : "decreased"; }

std::optional<Judgment> parse_judgment(std::string_view text) {
  if (text == "increased") return Judgment::Increased;
  if (text == "decreased") return Judgment::Decreased;
  return std::nullopt;
}

RateReport success_rates(const RatingSession& session, const std::vector<RatingRecord>& ratings) {
  RateReport report;
  report.session_id = session.id;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : ratings) {
    const Comparison* c = session.find(r.item_id);
    if (!c) throw ConfigError("rating references unknown item '" + r.item_id + "'");
    if (!seen.emplace(r.rater_id, r.item_id).second) {
      throw ConfigError("rater '" + r.rater_id + "' rated item '" + r.item_id + "' twice");
    }
    auto& cell = report.cells[trait_index(c->dimension)][c->polarity == Polarity::Positive ? 0 : 1];
    const Judgment wanted =
        c->polarity == Polarity::Positive ? Judgment::Increased : Judgment::Decreased;
    ++cell.total;
    if (r.judgment == wanted) ++cell.successes;
  }
  for (auto& per_trait : report.cells) {
    for (auto& cell : per_trait) {
      if (cell.total > 0) {
        cell.rate = static_cast<double>(cell.successes) / static_cast<double>(cell.total);
      }
    }
  }
  return report;
}

RatingStore::RatingStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      torn_tail_ = true;
      break;
    }
    ++line_no;
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    valid_bytes_ = pos;
    if (trim(line).empty()) continue;
    RatingRecord rec;
    try {
      rec = rating_from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw ConfigError(path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    keys_.emplace(rec.rater_id, rec.item_id);
    raters_.insert(rec.rater_id);
    records_.push_back(std::move(rec));
  }
}

bool RatingStore::append(const std::vector<RatingRecord>& records) {
  std::lock_guard lock(mutex_);
  std::set<std::pair<std::string, std::string>> batch;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.rater_id, r.item_id);
    if (keys_.count(key) || !batch.insert(key).second) return false;
  }
  std::string blob;
  for (const auto& r : records) blob += to_json(r).dump() + "\n";

  if (torn_tail_) {
    std::filesystem::resize_file(path_, valid_bytes_);
    torn_tail_ = false;
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::FILE* f = std::fopen(path_.string().c_str(), "ab");
  if (!f) throw ConfigError("cannot append to " + path_.string());
  const bool ok = std::fwrite(blob.data(), 1, blob.size(), f) == blob.size();
  const bool flushed = std::fflush(f) == 0;
  std::fclose(f);
  if (!ok || !flushed) throw ConfigError("short write to " + path_.string());
  valid_bytes_ += blob.size();

  for (const auto& r : records) {
    keys_.emplace(r.rater_id, r.item_id);
    raters_.insert(r.rater_id);
    records_.push_back(r);
  }
  return true;
}

bool RatingStore::has_rater(const std::string& rater_id) const {
  std::lock_guard lock(mutex_);
  return raters_.count(rater_id) > 0;
}

std::vector<RatingRecord> RatingStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

json to_json(const Essay& essay) {
  return json{{"id", essay.id},
              {"dimension", trait_symbol(essay.dimension)},
              {"condition", condition_name(essay.condition)},
              {"text", essay.text},
              {"generator", {{"model", essay.generator_model}, {"method", essay.generator_method}}}};
}

Essay essay_from_json(const json& j) {
  Essay e;
  try {
    e.id = j.at("id").get<std::string>();
    e.dimension = trait_field(j, "dimension");
    e.condition = parse_condition(j.at("condition").get<std::string>());
    e.text = j.at("text").get<std::string>();
    if (j.contains("generator")) {
      e.generator_model = j.at("generator").value("model", std::string{});
      e.generator_method = j.at("generator").value("method", std::string{});
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed essay: ") + ex.what());
  }
  if (e.text.empty()) throw ConfigError("essay '" + e.id + "' is empty");
  return e;
}

json to_json(const RatingSession& session) {
  json comparisons = json::array();
  for (const auto& c : session.comparisons) {
    comparisons.push_back({{"item_id", c.item_id},
                           {"dimension", trait_symbol(c.dimension)},
                           {"polarity", polarity_symbol(c.polarity)},
                           {"neutral_essay_id", c.neutral_essay_id},
                           {"induced_essay_id", c.induced_essay_id},
                           {"presentation_flip", c.presentation_flip}});
  }
  return json{{"id", session.id},
              {"seed", session.seed},
              {"status", session.status},
              {"comparisons", comparisons}};
}

RatingSession session_from_json(const json& j) {
  RatingSession s;
  try {
    s.id = j.at("id").get<std::string>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.status = j.value("status", std::string("open"));
    for (const auto& cj : j.at("comparisons")) {
      Comparison c;
      c.item_id = cj.at("item_id").get<std::string>();
      c.dimension = trait_field(cj, "dimension");
      const auto pol = parse_polarity(cj.at("polarity").get<std::string>());
      if (!pol) throw ConfigError("bad polarity in session comparison " + c.item_id);
      c.polarity = *pol;
      c.neutral_essay_id = cj.at("neutral_essay_id").get<std::string>();
      c.induced_essay_id = cj.at("induced_essay_id").get<std::string>();
      c.presentation_flip = cj.value("presentation_flip", false);
      s.comparisons.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed session: ") + e.what());
  }
  return s;
}

json to_json(const RatingRecord& record) {
  return json{{"session_id", record.session_id},
              {"rater_id", record.rater_id},
              {"item_id", record.item_id},
              {"judgment", judgment_name(record.judgment)},
              {"ts", record.ts}};
}

RatingRecord rating_from_json(const json& j) {
  RatingRecord r;
  try {
    r.session_id = j.at("session_id").get<std::string>();
    r.rater_id = j.at("rater_id").get<std::string>();
    r.item_id = j.at("item_id").get<std::string>();
    const auto judgment = parse_judgment(j.at("judgment").get<std::string>());
    if (!judgment) throw ConfigError("judgment must be 'increased' or 'decreased'");
    r.judgment = *judgment;
    r.ts = j.value("ts", std::string{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed rating: ") + e.what());
  }
  return r;
}

json to_json(const RateReport& report) {
  json cells = json::object();
  for (Trait t : kAllTraits) {
    for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
      const auto& cell = report.at(t, p);
      cells[trait_symbol(t) + polarity_symbol(p)] = {
          {"successes", cell.successes},
          {"total", cell.total},
          {"rate", cell.rate ? json(round4(*cell.rate)) : json(nullptr)}};
    }
  }
  return json{{"session_id", report.session_id}, {"cells", cells}};
}

std::vector<Essay> load_essays(const std::filesystem::path& path) {
  const auto doc = parse_json_file(path);
  if (!doc.is_array()) throw ConfigError(path.string() + ": essays file must be an array");
  std::vector<Essay> essays;
  for (const auto& e : doc) essays.push_back(essay_from_json(e));
  return essays;
}

RatingSession load_session(const std::filesystem::path& path) {
  return session_from_json(parse_json_file(path));
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mpi

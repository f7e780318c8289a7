#include "mpi/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "mpi/errors.hpp"

namespace mpi {

using nlohmann::json;

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct LetterHit {
  Choice choice;
  std::size_t end;
};

// Rule 1: letter tokens in the leading clause of the first non-empty line.
std::vector<LetterHit> scan_letter_tokens(std::string_view text) {
  std::vector<LetterHit> hits;
  std::size_t start = 0;
  while (start < text.size() && is_space(text[start])) ++start;
  std::size_t line_end = text.find('\n', start);
  if (line_end == std::string_view::npos) line_end = text.size();

  for (std::size_t i = start; i < line_end; ++i) {
    const char c = text[i];
    if (c == '(' && i + 2 < line_end && text[i + 2] == ')') {
      if (auto choice = choice_from_letter(text[i + 1])) {
        std::size_t end = i + 3;
        if (end < line_end && text[end] == '.') ++end;
        hits.push_back({*choice, end});
        i = end - 1;
        continue;
      }
    }
    if (c >= 'A' && c <= 'E') {
      const bool left_ok = i == start || !is_alnum(text[i - 1]);
      const char next = i + 1 < line_end ? text[i + 1] : ' ';
      const char after = i + 2 < line_end ? text[i + 2] : ' ';
      bool right_ok = !is_alnum(next) && next != '-' && next != '\'';
      // "E.g." is an abbreviation, not an answer.
      if (next == '.' && is_alnum(after)) right_ok = false;
      if (left_ok && right_ok) {
        std::size_t end = i + 1;
        if (next == '.' || next == ')' || next == ':') ++end;
        hits.push_back({*choice_from_letter(c), end});
        i = end - 1;
        continue;
      }
    }
    const bool terminator = c == '.' || c == '!' || c == '?' || c == ';';
    if (terminator && (i + 1 >= line_end || is_space(text[i + 1]))) break;
  }
  return hits;
}

struct LabelHit {
  Choice choice;
  std::size_t begin;
  std::size_t end;
};

// Rule 2: whole-word, case-insensitive label matches anywhere in the text.
std::vector<LabelHit> scan_labels(std::string_view text,
                                  const std::array<std::string, 5>& labels) {
  const std::string hay = lower(text);
  std::vector<LabelHit> hits;
  for (Choice c : kAllChoices) {
    const std::string needle = lower(labels[choice_index(c)]);
    if (needle.empty()) continue;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
      const auto end = pos + needle.size();
      const bool left_ok = pos == 0 || !is_alnum(hay[pos - 1]);
      const bool right_ok = end >= hay.size() || !is_alnum(hay[end]);
      if (left_ok && right_ok) hits.push_back({c, pos, end});
    }
  }
  // A label nested in a longer matched label does not count on its own.
  std::vector<LabelHit> kept;
  for (const auto& h : hits) {
    const bool nested = std::any_of(hits.begin(), hits.end(), [&](const LabelHit& o) {
      return &o != &h && o.begin <= h.begin && h.end <= o.end && (o.end - o.begin) > (h.end - h.begin);
    });
    if (!nested) kept.push_back(h);
  }
  std::sort(kept.begin(), kept.end(),
            [](const LabelHit& a, const LabelHit& b) { return a.begin < b.begin; });
  return kept;
}

std::size_t skip_separators(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (is_space(text[pos]) || text[pos] == '.' || text[pos] == ',' ||
                               text[pos] == ':' || text[pos] == '-' || text[pos] == ')')) {
    ++pos;
  }
  return pos;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double population_sigma(const std::vector<int>& scores, double mean) {
  double acc = 0;
  for (int s : scores) {
    const double d = s - mean;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(scores.size()));
}

}  // namespace

ParsedChoice parse_choice(std::string_view raw, const std::array<std::string, 5>& option_labels) {
  ParsedChoice out;
  if (trim(raw).empty()) {
    out.reason = "empty";
    return out;
  }

  const auto letters = scan_letter_tokens(raw);
  if (!letters.empty()) {
    const bool agree = std::all_of(letters.begin(), letters.end(), [&](const LetterHit& h) {
      return h.choice == letters.front().choice;
    });
    if (!agree) {
      out.reason = "ambiguous";
      return out;
    }
    out.choice = letters.front().choice;
    out.token_end = letters.front().end;
    return out;
  }

  const auto labels = scan_labels(raw, option_labels);
  if (!labels.empty()) {
    const bool agree = std::all_of(labels.begin(), labels.end(), [&](const LabelHit& h) {
      return h.choice == labels.front().choice;
    });
    if (!agree) {
      out.reason = "ambiguous";
      return out;
    }
    out.choice = labels.front().choice;
    out.token_end = labels.front().end;
    return out;
  }

  out.reason = "no match";
  return out;
}

std::optional<std::string> extract_explanation(std::string_view raw, const ParsedChoice& parsed,
                                               const std::array<std::string, 5>& option_labels) {
  if (!parsed.valid() || parsed.token_end >= raw.size()) return std::nullopt;
  std::size_t pos = skip_separators(raw, parsed.token_end);
  const std::string label = lower(option_labels[choice_index(*parsed.choice)]);
  if (lower(raw.substr(pos, label.size())) == label) {
    pos = skip_separators(raw, pos + label.size());
  }
  std::string rest = trim(raw.substr(std::min(pos, raw.size())));
  if (rest.empty()) return std::nullopt;
  return rest;
}

ItemResponse make_response(std::string item_id, std::string raw, bool capture_explanation) {
  ItemResponse r;
  r.item_id = std::move(item_id);
  const auto parsed = parse_choice(r.raw = std::move(raw));
  r.parsed = parsed.choice;
  if (!parsed.valid()) r.invalid_reason = parsed.reason;
  if (capture_explanation) r.explanation = extract_explanation(r.raw, parsed);
  return r;
}

OceanReport score_responses(const std::vector<ItemResponse>& responses, const Inventory& inv,
                            std::string model) {
  OceanReport report;
  report.model = std::move(model);
  report.inventory = inv.name();
  PerTrait<std::vector<int>> scores;
  for (Trait t : kAllTraits) report.traits[trait_index(t)].dimension = t;

  for (const auto& r : responses) {
    const InventoryItem* item = inv.find(r.item_id);
    if (!item) throw ConfigError("response for unknown item '" + r.item_id + "'");
    auto& tr = report.traits[trait_index(item->dimension)];
    if (r.parsed) {
      scores[trait_index(item->dimension)].push_back(item_score(*r.parsed, item->key));
      ++tr.n_valid;
    } else {
      ++tr.n_invalid;
    }
  }

  for (Trait t : kAllTraits) {
    const auto& s = scores[trait_index(t)];
    auto& tr = report.traits[trait_index(t)];
    if (s.empty()) continue;
    double sum = 0;
    for (int v : s) sum += v;
    const double mean = sum / static_cast<double>(s.size());
    tr.mean = mean;
    tr.sigma = population_sigma(s, mean);
  }
  return report;
}

std::vector<ItemResponse> administer(Gateway& gateway, const Inventory& inv,
                                     const PromptTemplate& tpl, const AdministerOptions& options) {
  tpl.validate();
  const auto& items = inv.items();
  const std::size_t n = items.size();
  std::vector<std::string> prompts(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string rendered = render_prompt(items[i], tpl, RenderOptions{options.explain});
    prompts[i] = options.persona_prefix && !options.persona_prefix->empty()
                     ? *options.persona_prefix + "\n\n" + rendered
                     : std::move(rendered);
  }

  std::vector<ItemResponse> responses(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        auto completion = gateway.complete(prompts[i]);
        responses[i] = make_response(items[i].id, std::move(completion.text), options.explain);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(gateway.profile().parallelism));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Report the earliest failing item so the error does not depend on timing.
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const GatewayError& e) {
      throw GatewayError("item '" + items[i].id + "': " + e.what());
    }
  }

  const auto invalid = static_cast<std::size_t>(
      std::count_if(responses.begin(), responses.end(),
                    [](const ItemResponse& r) { return !r.valid(); }));
  if (static_cast<double>(invalid) > options.max_invalid_fraction * static_cast<double>(n)) {
    throw InvalidResponsesError(invalid, n);
  }
  return responses;
}

const HumanReference& human_reference() {
  static const HumanReference ref{{3.44, 3.60, 3.41, 3.66, 2.80}, {1.06, 0.99, 1.03, 1.02, 1.03}};
  return ref;
}

std::vector<Trait> HumanComparison::close_dimensions() const {
  std::vector<Trait> out;
  for (Trait t : kAllTraits) {
    const auto& d = deltas[trait_index(t)];
    if (d.mean_within && d.sigma_within) out.push_back(t);
  }
  return out;
}

HumanComparison compare_to_human(const OceanReport& report, const HumanReference& ref,
                                 ClosenessThresholds thresholds) {
  HumanComparison out;
  out.thresholds = thresholds;
  for (Trait t : kAllTraits) {
    const auto& tr = report[t];
    if (!tr.defined()) {
      throw std::invalid_argument("dimension " + trait_symbol(t) + " is undefined in the report");
    }
    auto& d = out.deltas[trait_index(t)];
    d.delta_mean = std::abs(*tr.mean - ref.mean[trait_index(t)]);
    d.delta_sigma = std::abs(*tr.sigma - ref.sigma[trait_index(t)]);
    d.mean_within = d.delta_mean <= thresholds.mean;
    d.sigma_within = d.delta_sigma <= thresholds.sigma;
  }
  return out;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

json to_json(const OceanReport& report) {
  json traits = json::object();
  for (Trait t : kAllTraits) {
    const auto& tr = report[t];
    traits[trait_symbol(t)] = {{"mean", tr.mean ? json(round4(*tr.mean)) : json(nullptr)},
                               {"sigma", tr.sigma ? json(round4(*tr.sigma)) : json(nullptr)},
                               {"n_valid", tr.n_valid},
                               {"n_invalid", tr.n_invalid}};
  }
  return json{{"model", report.model},
              {"inventory", report.inventory},
              {"induction", report.induction ? to_json(*report.induction) : json(nullptr)},
              {"traits", traits}};
}

json to_json(const HumanComparison& comparison) {
  json deltas = json::object();
  json close = json::array();
  for (Trait t : kAllTraits) {
    const auto& d = comparison[t];
    deltas[trait_symbol(t)] = {{"delta_mean", round4(d.delta_mean)},
                               {"delta_sigma", round4(d.delta_sigma)},
                               {"mean_within", d.mean_within},
                               {"sigma_within", d.sigma_within}};
  }
  for (Trait t : comparison.close_dimensions()) close.push_back(trait_symbol(t));
  return json{{"deltas", deltas},
              {"thresholds", {{"mean", comparison.thresholds.mean}, {"sigma", comparison.thresholds.sigma}}},
              {"close_dimensions", close}};
}

}  // namespace mpi

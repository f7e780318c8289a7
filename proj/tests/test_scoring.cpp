#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mpi/scoring.hpp"
#include "parser_corpus.hpp"
#include "test_support.hpp"

using namespace mpi;
using mpi::testing::fixture;
using mpi::testing::scripted_profile;

namespace {

/// Mean and population sigma from integer sums: sigma = sqrt(n*sum(x^2) - sum(x)^2) / n.
std::pair<double, double> oracle_stats(const std::vector<int>& xs) {
  long long n = static_cast<long long>(xs.size());
  long long s = 0, ss = 0;
  for (int x : xs) {
    s += x;
    ss += static_cast<long long>(x) * x;
  }
  return {static_cast<double>(s) / static_cast<double>(n),
          std::sqrt(static_cast<double>(n * ss - s * s)) / static_cast<double>(n)};
}

std::vector<ItemResponse> answer_all(const Inventory& inv, const std::vector<Choice>& choices) {
  std::vector<ItemResponse> out;
  for (std::size_t i = 0; i < inv.size(); ++i) {
    out.push_back(make_response(inv.items()[i].id, option_text(choices[i])));
  }
  return out;
}

}  // namespace

TEST_CASE("parser corpus agrees with labels") {
  for (const auto& entry : mpi::testing::parser_corpus()) {
    CAPTURE(entry.raw);
    const auto parsed = parse_choice(entry.raw);
    if (entry.expected) {
      REQUIRE(parsed.valid());
      CHECK(choice_letter(*parsed.choice) == *entry.expected);
    } else {
      CHECK_FALSE(parsed.valid());
      CHECK(parsed.reason == entry.reason);
    }
  }
  CHECK(mpi::testing::parser_corpus().size() >= 20);
}

TEST_CASE("explanations follow the choice") {
  const std::string raw = "(A). Very Accurate. I enjoy meeting new people at parties.";
  const auto parsed = parse_choice(raw);
  CHECK(extract_explanation(raw, parsed) == "I enjoy meeting new people at parties.");
  const std::string bare = "(C). Neither Accurate Nor Inaccurate";
  CHECK_FALSE(extract_explanation(bare, parse_choice(bare)).has_value());
  const auto r = make_response("x", "D) I rarely plan ahead.", true);
  CHECK(r.explanation == "I rarely plan ahead.");
}

TEST_CASE("item_score table") {
  CHECK(item_score(Choice::A, ItemKey::Positive) == 5);
  CHECK(item_score(Choice::A, ItemKey::Negative) == 1);
  CHECK(item_score(Choice::C, ItemKey::Positive) == 3);
  CHECK(item_score(Choice::C, ItemKey::Negative) == 3);
  CHECK(item_score(Choice::E, ItemKey::Positive) == 1);
  CHECK(item_score(Choice::E, ItemKey::Negative) == 5);
  for (Choice c : kAllChoices) {
    CHECK(item_score(c, ItemKey::Positive) + item_score(c, ItemKey::Negative) == 6);
    CHECK(item_score(mirror(c), ItemKey::Positive) == item_score(c, ItemKey::Negative));
  }
}

TEST_CASE("hand-computed case: keys (+,+,-,-) answered (A,B,D,E)") {
  const auto inv = parse_inventory_json(R"([
    {"id":"e1","statement":"a","dimension":"E","key":1},
    {"id":"e2","statement":"b","dimension":"E","key":1},
    {"id":"e3","statement":"c","dimension":"E","key":-1},
    {"id":"e4","statement":"d","dimension":"E","key":-1}])",
                                        "hand");
  const auto report =
      score_responses(answer_all(inv, {Choice::A, Choice::B, Choice::D, Choice::E}), inv);
  CHECK(*report[Trait::E].mean == 4.5);
  CHECK(*report[Trait::E].sigma == 0.5);
  CHECK(report[Trait::E].n_valid == 4);
  CHECK_FALSE(report[Trait::O].defined());
}

TEST_CASE("all-midpoint respondent") {
  const auto inv = load_inventory(fixture("inventory_120.json"));
  const auto report = score_responses(answer_all(inv, std::vector<Choice>(inv.size(), Choice::C)), inv);
  for (Trait t : kAllTraits) {
    CHECK(*report[t].mean == 3.0);
    CHECK(*report[t].sigma == 0.0);
  }
}

TEST_CASE("invalid responses are excluded from counts") {
  const auto inv = load_inventory(fixture("two_items.json"));
  const auto report = score_responses(
      {make_response("e1", "(A). Very Accurate"), make_response("e2", "I cannot answer this.")}, inv);
  CHECK(*report[Trait::E].mean == 5.0);
  CHECK(report[Trait::E].n_valid == 1);
  CHECK(report[Trait::E].n_invalid == 1);
  CHECK_THROWS_AS(score_responses({make_response("zz", "(A)")}, inv), ConfigError);
}

TEST_CASE("scores match an independent oracle on random fixtures") {
  const auto inv = load_inventory(fixture("inventory_120.json"));
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Choice> choices;
    PerTrait<std::vector<int>> expected;
    for (const auto& item : inv.items()) {
      const auto c = static_cast<Choice>(pick(rng));
      choices.push_back(c);
      const int letter_pos = static_cast<int>(choice_index(c));
      expected[trait_index(item.dimension)].push_back(item.key == ItemKey::Positive ? 5 - letter_pos
                                                                                   : 1 + letter_pos);
    }
    const auto report = score_responses(answer_all(inv, choices), inv);
    for (Trait t : kAllTraits) {
      const auto [m, s] = oracle_stats(expected[trait_index(t)]);
      CHECK(*report[t].mean == doctest::Approx(m).epsilon(1e-12));
      CHECK(*report[t].sigma == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("inverting responses maps m to 6-m and keeps sigma") {
  const auto inv = load_inventory(fixture("inventory_120.json"));
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Choice> choices, mirrored;
    for (std::size_t i = 0; i < inv.size(); ++i) {
      choices.push_back(static_cast<Choice>(pick(rng)));
      mirrored.push_back(mirror(choices.back()));
    }
    const auto a = score_responses(answer_all(inv, choices), inv);
    const auto b = score_responses(answer_all(inv, mirrored), inv);
    for (Trait t : kAllTraits) {
      CHECK(std::abs(*b[t].mean - (6.0 - *a[t].mean)) <= 1e-12);
      CHECK(std::abs(*b[t].sigma - *a[t].sigma) <= 1e-12);
    }
  }
}

TEST_CASE("scores are invariant to response order") {
  const auto inv = load_inventory(fixture("inventory_120.json"));
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> pick(0, 4);
  std::vector<Choice> choices;
  for (std::size_t i = 0; i < inv.size(); ++i) choices.push_back(static_cast<Choice>(pick(rng)));
  auto responses = answer_all(inv, choices);
  const auto base = score_responses(responses, inv);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(responses.begin(), responses.end(), rng);
    const auto again = score_responses(responses, inv);
    for (Trait t : kAllTraits) {
      CHECK(*again[t].mean == doctest::Approx(*base[t].mean).epsilon(1e-12));
      CHECK(*again[t].sigma == doctest::Approx(*base[t].sigma).epsilon(1e-12));
    }
  }
}

TEST_CASE("administer a scripted persona over the 120-item fixture") {
  auto inv = std::make_shared<Inventory>(load_inventory(fixture("inventory_120.json")));
  Gateway gw(scripted_profile({3, 3, 5, 3, 3}, inv), nullptr);
  const auto responses = administer(gw, *inv, builtin_template("gpt35"));
  REQUIRE(responses.size() == 120);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    CHECK(responses[i].item_id == inv->items()[i].id);
    CHECK(responses[i].valid());
  }
  const auto report = score_responses(responses, *inv);
  for (Trait t : kAllTraits) {
    CHECK(*report[t].mean == (t == Trait::E ? 5.0 : 3.0));
    CHECK(*report[t].sigma == 0.0);
  }
}

TEST_CASE("administer prepends the persona prefix and handles explain mode") {
  class Recorder : public Backend {
   public:
    std::mutex mu;
    std::vector<std::string> prompts;
    std::string generate(const std::string& prompt) override {
      std::lock_guard lock(mu);
      prompts.push_back(prompt);
      return "(B). Moderately Accurate. I like company.";
    }
  };
  auto backend = std::make_unique<Recorder>();
  auto* rec = backend.get();
  const auto inv = load_inventory(fixture("two_items.json"));
  Gateway gw(scripted_profile({3, 3, 3, 3, 3}), nullptr, std::move(backend));
  AdministerOptions opts;
  opts.persona_prefix = "You are an extraversive person.";
  opts.explain = true;
  const auto responses = administer(gw, inv, builtin_template("gpt35"), opts);
  REQUIRE(rec->prompts.size() == 2);
  for (const auto& p : rec->prompts) {
    CHECK(p.rfind("You are an extraversive person.\n\n", 0) == 0);
    CHECK(p.find("and explain why") != std::string::npos);
  }
  CHECK(responses[0].explanation == "I like company.");
}

TEST_CASE("replay administration is byte-stable") {
  const auto inv = load_inventory(fixture("two_items.json"));
  const auto tpl = builtin_template("gpt35");
  auto store = std::make_shared<ReplayStore>();
  ModelProfile p;
  p.name = "replay";
  p.kind = ProfileKind::Replay;
  store->record("replay", p.decoding, render_prompt(inv.items()[0], tpl), "(A). Very Accurate");
  store->record("replay", p.decoding, render_prompt(inv.items()[1], tpl), "(E). Very Inaccurate");
  Gateway gw(p, store);
  const auto a = administer(gw, inv, tpl);
  const auto b = administer(gw, inv, tpl);
  REQUIRE(a.size() == 2);
  CHECK(to_json(score_responses(a, inv)).dump() == to_json(score_responses(b, inv)).dump());
  CHECK(*score_responses(a, inv)[Trait::E].mean == 5.0);
}

TEST_CASE("invalid-response threshold") {
  const auto full = load_inventory(fixture("inventory_120.json"));
  const Inventory inv("ten", std::vector<InventoryItem>(full.items().begin(), full.items().begin() + 10));
  const auto tpl = builtin_template("gpt35");
  auto store = std::make_shared<ReplayStore>();
  ModelProfile p;
  p.name = "replay";
  p.kind = ProfileKind::Replay;
  for (std::size_t i = 0; i < inv.size(); ++i) {
    store->record("replay", p.decoding, render_prompt(inv.items()[i], tpl),
                  i < 3 ? "zxqv blorp" : "(C). Neither Accurate Nor Inaccurate");
  }
  Gateway gw(p, store);
  CHECK_THROWS_WITH_AS(administer(gw, inv, tpl), "too many invalid responses (3/10)",
                       InvalidResponsesError);
  AdministerOptions lenient;
  lenient.max_invalid_fraction = 0.3;
  CHECK(administer(gw, inv, tpl, lenient).size() == 10);
}

TEST_CASE("gateway failures name the item") {
  class Failing : public Backend {
   public:
    std::string generate(const std::string&) override { throw GatewayError("boom"); }
  };
  const auto inv = load_inventory(fixture("two_items.json"));
  Gateway gw(scripted_profile({3, 3, 3, 3, 3}), nullptr, std::make_unique<Failing>());
  CHECK_THROWS_WITH_AS(administer(gw, inv, builtin_template("gpt35")), doctest::Contains("e1"),
                       GatewayError);
}

TEST_CASE("human reference constants") {
  const auto& ref = human_reference();
  const PerTrait<double> means{3.44, 3.60, 3.41, 3.66, 2.80};
  const PerTrait<double> sigmas{1.06, 0.99, 1.03, 1.02, 1.03};
  CHECK(ref.mean == means);
  CHECK(ref.sigma == sigmas);
}

namespace {

OceanReport report_from(const PerTrait<double>& means, const PerTrait<double>& sigmas) {
  OceanReport r;
  for (Trait t : kAllTraits) {
    auto& tr = r.traits[trait_index(t)];
    tr.dimension = t;
    tr.mean = means[trait_index(t)];
    tr.sigma = sigmas[trait_index(t)];
  }
  return r;
}

double r2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

TEST_CASE("human comparison arithmetic") {
  const auto& ref = human_reference();

  SUBCASE("identity") {
    const auto cmp = compare_to_human(report_from(ref.mean, ref.sigma), ref);
    for (Trait t : kAllTraits) {
      CHECK(cmp[t].delta_mean == 0.0);
      CHECK(cmp[t].delta_sigma == 0.0);
    }
    CHECK(cmp.close_dimensions().size() == 5);
  }
  SUBCASE("GPT-3.5 row") {
    const auto cmp = compare_to_human(
        report_from({3.50, 3.83, 4.00, 3.58, 3.12}, {1.76, 1.52, 1.53, 1.22, 1.69}), ref);
    const PerTrait<double> expected{0.06, 0.23, 0.59, 0.08, 0.32};
    for (Trait t : kAllTraits) CHECK(r2(cmp[t].delta_mean) == expected[trait_index(t)]);
  }
  SUBCASE("Alpaca row") {
    const auto cmp = compare_to_human(
        report_from({3.58, 3.75, 4.00, 3.50, 2.75}, {1.08, 0.97, 1.00, 0.87, 0.88}), ref);
    CHECK(r2(cmp[Trait::O].delta_mean) == 0.14);
    CHECK(r2(cmp[Trait::O].delta_sigma) == 0.02);
  }
  SUBCASE("undefined dimension") {
    auto r = report_from(ref.mean, ref.sigma);
    r.traits[0].mean.reset();
    r.traits[0].sigma.reset();
    CHECK_THROWS_AS(compare_to_human(r, ref), std::invalid_argument);
  }
}

TEST_CASE("report json") {
  const auto inv = load_inventory(fixture("two_items.json"));
  const auto j = to_json(score_responses(answer_all(inv, {Choice::A, Choice::B}), inv, "m"));
  CHECK(j["model"] == "m");
  CHECK(j["traits"]["E"]["mean"] == 3.5);
  CHECK(j["traits"]["E"]["sigma"] == 1.5);
  CHECK(j["traits"]["O"]["mean"].is_null());
  CHECK(round4(1.234567) == 1.2346);
}

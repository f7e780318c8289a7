#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "mpi/induction.hpp"
#include "mpi/vignette.hpp"
#include "study_fixture.hpp"
#include "test_support.hpp"

using namespace mpi;
using mpi::testing::full_essay_set;
using mpi::testing::scripted_profile;
using mpi::testing::TempDir;

TEST_CASE("built-in contexts") {
  const auto& ctxs = builtin_contexts();
  REQUIRE(ctxs.size() == 5);
  std::set<Trait> seen;
  for (const auto& c : ctxs) seen.insert(c.dimension);
  CHECK(seen.size() == 5);
  CHECK(builtin_context(Trait::C).scenario.rfind("You're working alone late at the office", 0) == 0);
  CHECK(builtin_context(Trait::E).scenario.find("meet your friend at the party at 9:00 pm") !=
        std::string::npos);
  for (const auto& c : ctxs) CHECK(c.question == kVignetteQuestion);
}

TEST_CASE("vignette prompt layout") {
  const auto& ctx = builtin_context(Trait::C);
  const auto neutral = vignette_prompt(std::nullopt, ctx);
  CHECK(neutral.rfind("Context:\nPremise: You're working alone late at the office", 0) == 0);
  CHECK(neutral.size() >= 3);
  CHECK(neutral.substr(neutral.size() - 3) == "\nA:");
  CHECK(neutral.find("\nQ: " + std::string(kVignetteQuestion) + "\n") != std::string::npos);

  PersonalityPrompt pp;
  pp.target = {Trait::E, Polarity::Positive};
  pp.method = InductionMethod::P2;
  pp.portrait = pp.final_prefix = "They light up every room.";
  const auto induced = vignette_prompt(pp, builtin_context(Trait::E));
  CHECK(induced.find(pp.final_prefix) < induced.find("Premise:"));
  CHECK(induced.rfind("Context: They light up every room.\n", 0) == 0);
}

TEST_CASE("generate_essay") {
  Gateway echo(scripted_profile({3, 3, 3, 3, 3}, nullptr, "I would hide in a corner."), nullptr);
  const auto neutral = generate_essay(echo, std::nullopt, builtin_context(Trait::E));
  CHECK(neutral.text == "I would hide in a corner.");
  CHECK(neutral.condition == Condition::Neutral);
  CHECK(neutral.id == "E-neutral");
  CHECK(neutral.generator_method == "none");

  const auto pp = naive_personality({Trait::E, Polarity::Negative}, default_lexicon());
  const auto induced = generate_essay(echo, pp, builtin_context(Trait::E));
  CHECK(induced.condition == Condition::Negative);
  CHECK(induced.generator_method == "naive");

  Gateway blank(scripted_profile({3, 3, 3, 3, 3}, nullptr, "  "), nullptr);
  CHECK_THROWS_WITH_AS(generate_essay(blank, std::nullopt, builtin_context(Trait::O)),
                       doctest::Contains("empty essay"), GatewayError);
}

TEST_CASE("questionnaire construction") {
  const auto essays = full_essay_set();
  const auto s = build_questionnaire(essays, 42);
  REQUIRE(s.comparisons.size() == 10);
  std::map<Trait, int> per_dim;
  std::set<std::string> ids;
  for (const auto& c : s.comparisons) {
    ++per_dim[c.dimension];
    ids.insert(c.item_id);
    CHECK(c.neutral_essay_id == trait_symbol(c.dimension) + "-neutral");
    CHECK(c.induced_essay_id == trait_symbol(c.dimension) + "-" + polarity_name(c.polarity));
  }
  for (Trait t : kAllTraits) CHECK(per_dim[t] == 2);
  CHECK(ids.size() == 10);
  CHECK(s.status == "open");

  SUBCASE("same seed, same session") { CHECK(build_questionnaire(essays, 42) == s); }
  SUBCASE("input order does not matter") {
    auto reversed = essays;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(build_questionnaire(reversed, 42) == s);
  }
  SUBCASE("seeds vary the layout") {
    std::set<std::string> layouts;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::string key;
      for (const auto& c : build_questionnaire(essays, seed).comparisons) {
        key += c.induced_essay_id + (c.presentation_flip ? "1" : "0");
      }
      layouts.insert(key);
    }
    CHECK(layouts.size() > 1);
  }
  SUBCASE("missing cell") {
    auto fourteen = essays;
    fourteen.pop_back();  // N-negative
    CHECK_THROWS_WITH_AS(build_questionnaire(fourteen, 1), doctest::Contains("N-negative"), ConfigError);
  }
  SUBCASE("duplicate cell") {
    auto sixteen = essays;
    sixteen.push_back(essays.front());
    CHECK_THROWS_AS(build_questionnaire(sixteen, 1), ConfigError);
  }
}

TEST_CASE("success rates") {
  const auto s = build_questionnaire(full_essay_set(), 7);
  const auto& e_pos = mpi::testing::comparison_for(s, Trait::E, Polarity::Positive);
  const auto& a_neg = mpi::testing::comparison_for(s, Trait::A, Polarity::Negative);
  const auto& o_pos = mpi::testing::comparison_for(s, Trait::O, Polarity::Positive);

  SUBCASE("45 of 50 raters see more extraversion") {
    std::vector<RatingRecord> ratings;
    for (int r = 0; r < 50; ++r) {
      ratings.push_back({s.id, "r" + std::to_string(r), e_pos.item_id,
                         r < 45 ? Judgment::Increased : Judgment::Decreased, "t"});
    }
    const auto report = success_rates(s, ratings);
    CHECK(report.at(Trait::E, Polarity::Positive).successes == 45);
    CHECK(report.at(Trait::E, Polarity::Positive).total == 50);
    CHECK(*report.at(Trait::E, Polarity::Positive).rate == 0.90);
    CHECK_FALSE(report.at(Trait::O, Polarity::Positive).rate.has_value());
    CHECK(to_json(report)["cells"]["E+"]["rate"] == 0.9);
    CHECK(to_json(report)["cells"]["O+"]["rate"].is_null());
  }
  SUBCASE("unanimous decrease on a negative item") {
    std::vector<RatingRecord> ratings;
    for (int r = 0; r < 10; ++r) {
      ratings.push_back({s.id, "r" + std::to_string(r), a_neg.item_id, Judgment::Decreased, "t"});
    }
    CHECK(*success_rates(s, ratings).at(Trait::A, Polarity::Negative).rate == 1.0);
  }
  SUBCASE("7 of 10") {
    std::vector<RatingRecord> ratings;
    for (int r = 0; r < 10; ++r) {
      ratings.push_back({s.id, "r" + std::to_string(r), o_pos.item_id,
                         r < 7 ? Judgment::Increased : Judgment::Decreased, "t"});
    }
    CHECK(*success_rates(s, ratings).at(Trait::O, Polarity::Positive).rate == 0.7);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(success_rates(s, {{s.id, "r", "q99", Judgment::Increased, "t"}}), ConfigError);
    const RatingRecord r{s.id, "r", e_pos.item_id, Judgment::Increased, "t"};
    CHECK_THROWS_AS(success_rates(s, {r, r}), ConfigError);
  }
}

TEST_CASE("conservation and flip neutrality on random rating sets") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> raters(1, 30);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = build_questionnaire(full_essay_set(), static_cast<std::uint64_t>(trial));
    const auto ratings = mpi::testing::random_ratings(s, rng, raters(rng));
    const auto report = success_rates(s, ratings);

    // Independent tally straight from the records.
    std::map<std::pair<Trait, Polarity>, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& r : ratings) {
      const auto* c = s.find(r.item_id);
      REQUIRE(c);
      auto& [succ, fail] = tally[{c->dimension, c->polarity}];
      const bool wanted = c->polarity == Polarity::Positive ? r.judgment == Judgment::Increased
                                                            : r.judgment == Judgment::Decreased;
      (wanted ? succ : fail)++;
    }
    std::size_t grand = 0;
    for (Trait t : kAllTraits) {
      for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
        const auto& cell = report.at(t, p);
        const auto [succ, fail] = tally[{t, p}];
        CHECK(cell.successes == succ);
        CHECK(cell.total == succ + fail);
        grand += cell.total;
      }
    }
    CHECK(grand == ratings.size());

    auto flipped = s;
    for (auto& c : flipped.comparisons) c.presentation_flip = !c.presentation_flip;
    CHECK(to_json(success_rates(flipped, ratings)).dump() == to_json(report).dump());
  }
}

TEST_CASE("rating store") {
  TempDir dir;
  const auto path = dir / "ratings.jsonl";
  const auto s = build_questionnaire(full_essay_set(), 3);
  std::mt19937 rng(1);
  const auto batch = mpi::testing::random_ratings(s, rng, 2);
  const std::vector<RatingRecord> first(batch.begin(), batch.begin() + 10);
  const std::vector<RatingRecord> second(batch.begin() + 10, batch.end());

  {
    RatingStore store(path);
    CHECK(store.append(first));
    CHECK_FALSE(store.append(first));
    // A batch mixing new and duplicate records is rejected as a whole.
    auto mixed = second;
    mixed.push_back(first.front());
    CHECK_FALSE(store.append(mixed));
    CHECK(store.records().size() == 10);
    CHECK(store.has_rater("rater0"));
    CHECK_FALSE(store.has_rater("rater1"));
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"session_id":"s","rater)";
  }
  {
    RatingStore store(path);
    CHECK(store.records() == first);
    CHECK(store.append(second));
  }
  RatingStore reopened(path);
  CHECK(reopened.records() == batch);
  const auto text = mpi::testing::slurp(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 20);

  // Replaying the log reproduces the report byte for byte.
  CHECK(canonical_dump(to_json(success_rates(s, reopened.records()))) ==
        canonical_dump(to_json(success_rates(s, batch))));
}

TEST_CASE("session and essay json round-trips") {
  const auto essays = full_essay_set();
  const auto s = build_questionnaire(essays, 5);
  CHECK(session_from_json(to_json(s)) == s);
  for (const auto& e : essays) CHECK(essay_from_json(to_json(e)) == e);
  const RatingRecord r{s.id, "x", s.comparisons[0].item_id, Judgment::Decreased, "t"};
  CHECK(rating_from_json(to_json(r)) == r);
  const auto dumped = canonical_dump(to_json(s));
  CHECK(dumped.back() == '\n');
  CHECK(canonical_dump(nlohmann::json::parse(dumped)) == dumped);
}

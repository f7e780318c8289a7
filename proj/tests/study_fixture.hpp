#pragma once

#include <random>
#include <string>
#include <vector>

#include "mpi/vignette.hpp"

namespace mpi::testing {

/// One essay per (dimension, condition) cell. Texts avoid condition words so
/// blindness checks can scan whole payloads.
inline std::vector<Essay> full_essay_set() {
  std::vector<Essay> essays;
  int n = 0;
  for (Trait t : kAllTraits) {
    for (Condition c : {Condition::Positive, Condition::Neutral, Condition::Negative}) {
      Essay e;
      e.dimension = t;
      e.condition = c;
      e.id = trait_symbol(t) + "-" + condition_name(c);
      e.text = "Essay number " + std::to_string(++n) + ". I would think it over and then act.";
      e.generator_model = "secret-model-x";
      e.generator_method = c == Condition::Neutral ? "none" : "p2";
      essays.push_back(e);
    }
  }
  return essays;
}

inline const Comparison& comparison_for(const RatingSession& s, Trait t, Polarity p) {
  for (const auto& c : s.comparisons) {
    if (c.dimension == t && c.polarity == p) return c;
  }
  throw std::logic_error("no comparison");
}

/// Every rater answers every item with a random judgment.
inline std::vector<RatingRecord> random_ratings(const RatingSession& s, std::mt19937& rng, int raters) {
  std::bernoulli_distribution coin(0.5);
  std::vector<RatingRecord> out;
  for (int r = 0; r < raters; ++r) {
    for (const auto& c : s.comparisons) {
      out.push_back({s.id, "rater" + std::to_string(r), c.item_id,
                     coin(rng) ? Judgment::Increased : Judgment::Decreased, "2024-01-01T00:00:00Z"});
    }
  }
  return out;
}

}  // namespace mpi::testing

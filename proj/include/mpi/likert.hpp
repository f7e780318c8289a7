#pragma once

#include <array>
#include <optional>
#include <string>

#include "mpi/trait.hpp"

namespace mpi {

enum class Choice { A, B, C, D, E };

inline constexpr std::array<Choice, 5> kAllChoices = {Choice::A, Choice::B, Choice::C, Choice::D,
                                                      Choice::E};

constexpr std::size_t choice_index(Choice c) { return static_cast<std::size_t>(c); }
constexpr char choice_letter(Choice c) { return static_cast<char>('A' + choice_index(c)); }
std::optional<Choice> choice_from_letter(char letter);

/// A..E score 5..1 under a positive key and 1..5 under a negative key.
constexpr int item_score(Choice c, ItemKey key) {
  const int i = static_cast<int>(choice_index(c));
  return key == ItemKey::Positive ? 5 - i : 1 + i;
}

/// Inverse of item_score: the option a respondent at `level` picks.
constexpr Choice choice_for_level(int level, ItemKey key) {
  return static_cast<Choice>(key == ItemKey::Positive ? 5 - level : level - 1);
}

/// A<->E, B<->D, C fixed.
constexpr Choice mirror(Choice c) { return static_cast<Choice>(4 - choice_index(c)); }

/// "(B). Moderately Accurate"
std::string option_text(Choice c);

}  // namespace mpi

#include "mpi/trait.hpp"

#include <algorithm>
#include <cctype>

namespace mpi {

namespace {

constexpr std::array<std::string_view, 5> kNames = {"Openness", "Conscientiousness",
                                                    "Extraversion", "Agreeableness",
                                                    "Neuroticism"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

char trait_letter(Trait t) { return "OCEAN"[trait_index(t)]; }

std::string trait_symbol(Trait t) { return std::string(1, trait_letter(t)); }

std::string trait_name(Trait t) { return std::string(kNames[trait_index(t)]); }

std::optional<Trait> parse_trait(std::string_view text) {
  if (text.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    for (Trait t : kAllTraits) {
      if (trait_letter(t) == c) return t;
    }
    return std::nullopt;
  }
  const std::string needle = lower(text);
  for (Trait t : kAllTraits) {
    if (lower(kNames[trait_index(t)]) == needle) return t;
  }
  return std::nullopt;
}

std::optional<ItemKey> key_from_sign(int sign) {
  if (sign == 1) return ItemKey::Positive;
  if (sign == -1) return ItemKey::Negative;
  return std::nullopt;
}

std::string polarity_symbol(Polarity p) { return p == Polarity::Positive ? "+" : "-"; }

std::string polarity_name(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

std::optional<Polarity> parse_polarity(std::string_view text) {
  const std::string s = lower(text);
  if (s == "+" || s == "positive" || s == "pos") return Polarity::Positive;
  if (s == "-" || s == "negative" || s == "neg") return Polarity::Negative;
  return std::nullopt;
}

}  // namespace mpi

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mpi {

enum class Trait { O, C, E, A, N };

inline constexpr std::array<Trait, 5> kAllTraits = {Trait::O, Trait::C, Trait::E, Trait::A,
                                                     Trait::N};

constexpr std::size_t trait_index(Trait t) { return static_cast<std::size_t>(t); }

char trait_letter(Trait t);
std::string trait_symbol(Trait t);
/// Full factor name, e.g. "Extraversion".
std::string trait_name(Trait t);
/// Accepts a single letter (either case) or the full factor name.
std::optional<Trait> parse_trait(std::string_view text);

/// Scoring direction of an inventory item.
enum class ItemKey { Positive = 1, Negative = -1 };

constexpr int key_sign(ItemKey k) { return static_cast<int>(k); }
std::optional<ItemKey> key_from_sign(int sign);

enum class Polarity { Positive, Negative };

std::string polarity_symbol(Polarity p);  // "+" or "-"
std::string polarity_name(Polarity p);    // "positive" or "negative"
std::optional<Polarity> parse_polarity(std::string_view text);

/// Per-trait storage indexed by Trait.
template <typename T>
using PerTrait = std::array<T, 5>;

}  // namespace mpi

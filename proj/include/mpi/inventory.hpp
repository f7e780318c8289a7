#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mpi/trait.hpp"

namespace mpi {

/// One self-description statement keyed to a trait.
///
/// `statement` is a capitalized fragment such as "Feel comfortable around
/// people": no leading "You" and no trailing period. Rendering adds both.
struct InventoryItem {
  std::string id;
  std::string statement;
  Trait dimension = Trait::O;
  ItemKey key = ItemKey::Positive;
  std::string source;

  bool operator==(const InventoryItem&) const = default;
};

/// Item counts per dimension split by key direction.
struct BalanceSummary {
  PerTrait<std::size_t> positive{};
  PerTrait<std::size_t> negative{};

  std::size_t total(Trait t) const {
    return positive[trait_index(t)] + negative[trait_index(t)];
  }
  bool operator==(const BalanceSummary&) const = default;
};

class Inventory {
 public:
  /// Validates ids, statements and the non-empty rule. Throws ConfigError.
  Inventory(std::string name, std::vector<InventoryItem> items);

  const std::string& name() const { return name_; }
  const std::vector<InventoryItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const BalanceSummary& balance() const { return balance_; }

  /// nullptr when absent.
  const InventoryItem* find(std::string_view id) const;

  bool operator==(const Inventory& other) const {
    return name_ == other.name_ && items_ == other.items_;
  }

 private:
  std::string name_;
  std::vector<InventoryItem> items_;
  BalanceSummary balance_;
};

enum class InventoryFormat { Json, Csv };

/// Loads an item bank. The inventory name defaults to the file stem.
Inventory load_inventory(const std::filesystem::path& path, InventoryFormat format);
/// Picks the format from the file extension (.csv, otherwise JSON).
Inventory load_inventory(const std::filesystem::path& path);

Inventory parse_inventory_json(std::string_view text, std::string name);
Inventory parse_inventory_csv(std::string_view text, std::string name);

/// Items of one dimension in file order.
std::vector<InventoryItem> item_pool(const Inventory& inv, Trait d);

/// The five Likert options, fixed A to E.
inline const std::array<std::string, 5> kLikertLabels = {
    "Very Accurate", "Moderately Accurate", "Neither Accurate Nor Inaccurate",
    "Moderately Inaccurate", "Very Inaccurate"};

/// A multiple-choice prompt layout.
///
/// `body` holds exactly one `{statement}` placeholder. It may also hold one
/// `{options}` marker, which expands to the lines "(A). Very Accurate" through
/// "(E). Very Inaccurate".
struct PromptTemplate {
  std::string id;
  std::string body;
  std::array<std::string, 5> option_labels = kLikertLabels;

  void validate() const;
};

PromptTemplate load_template(const std::filesystem::path& path);
PromptTemplate parse_template_json(std::string_view text);

/// Built-in layouts for the instruction-following and completion models the
/// inventory was designed around: "gpt35" (default), "alpaca", "gpt-neo", "gpt-neox".
const std::vector<PromptTemplate>& builtin_templates();
/// Throws ConfigError for unknown ids.
const PromptTemplate& builtin_template(std::string_view id);

/// "You {statement}." with the statement's first letter lowercased.
std::string statement_sentence(const InventoryItem& item);

struct RenderOptions {
  /// Extends the instruction with "and explain why".
  bool explain = false;
};

std::string render_prompt(const InventoryItem& item, const PromptTemplate& tpl,
                          const RenderOptions& options = {});

}  // namespace mpi

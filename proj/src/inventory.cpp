#include "mpi/inventory.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mpi/errors.hpp"

namespace mpi {

using nlohmann::json;

namespace {

constexpr std::string_view kStatementPlaceholder = "{statement}";
constexpr std::string_view kOptionsPlaceholder = "{options}";
constexpr std::string_view kExplainAnchor = "describes you";

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// Strips a leading "You " and a trailing period so the template owns both.
std::string normalize_statement(std::string_view raw) {
  std::string s = trim(raw);
  if (s.size() > 4 && (s.compare(0, 4, "You ") == 0 || s.compare(0, 4, "you ") == 0)) {
    s = trim(std::string_view(s).substr(4));
  }
  while (!s.empty() && s.back() == '.') s.pop_back();
  return trim(s);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Trait parse_dimension_field(std::string_view text, const std::string& id) {
  auto t = parse_trait(trim(text));
  if (!t || trim(text).size() != 1) {
    throw ConfigError("item '" + id + "': unknown dimension '" + std::string(text) + "'");
  }
  return *t;
}

ItemKey parse_key_text(std::string_view text, const std::string& id) {
  const std::string s = trim(text);
  if (s == "+1" || s == "1" || s == "+") return ItemKey::Positive;
  if (s == "-1" || s == "-") return ItemKey::Negative;
  throw ConfigError("item '" + id + "': key must be +1 or -1, got '" + s + "'");
}

ItemKey parse_key_json(const json& value, const std::string& id) {
  if (value.is_number_integer()) {
    if (auto k = key_from_sign(value.get<int>())) return *k;
    throw ConfigError("item '" + id + "': key must be +1 or -1, got " + value.dump());
  }
  if (value.is_string()) return parse_key_text(value.get<std::string>(), id);
  throw ConfigError("item '" + id + "': key must be +1 or -1, got " + value.dump());
}

// RFC 4180 subset: quoted fields with doubled quotes, CRLF or LF rows.
std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        row_has_content = false;
        break;
      default:
        field += c;
        row_has_content = true;
    }
  }
  if (quoted) throw ConfigError("csv: unterminated quoted field");
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string option_block(const std::array<std::string, 5>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += '\n';
    out += '(';
    out += static_cast<char>('A' + i);
    out += "). ";
    out += labels[i];
  }
  return out;
}

void replace_first(std::string& s, std::string_view from, std::string_view to) {
  if (auto pos = s.find(from); pos != std::string::npos) s.replace(pos, from.size(), to);
}

}  // namespace

Inventory::Inventory(std::string name, std::vector<InventoryItem> items)
    : name_(std::move(name)), items_(std::move(items)) {
  if (items_.empty()) throw ConfigError("empty inventory");
  std::unordered_set<std::string> seen;
  for (const auto& item : items_) {
    if (item.id.empty()) throw ConfigError("item with empty id");
    if (item.statement.empty()) throw ConfigError("item '" + item.id + "': empty statement");
    if (!seen.insert(item.id).second) throw ConfigError("duplicate item id '" + item.id + "'");
    auto& bucket = item.key == ItemKey::Positive ? balance_.positive : balance_.negative;
    ++bucket[trait_index(item.dimension)];
  }
}

const InventoryItem* Inventory::find(std::string_view id) const {
  auto it = std::find_if(items_.begin(), items_.end(),
                         [&](const InventoryItem& item) { return item.id == id; });
  return it == items_.end() ? nullptr : &*it;
}

Inventory parse_inventory_json(std::string_view text, std::string name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("inventory parse error: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("inventory JSON must be an array of items");
  std::vector<InventoryItem> items;
  items.reserve(doc.size());
  for (const auto& entry : doc) {
    if (!entry.is_object()) throw ConfigError("inventory entries must be objects");
    InventoryItem item;
    try {
      item.id = entry.at("id").get<std::string>();
      item.statement = normalize_statement(entry.at("statement").get<std::string>());
      const auto& dim = entry.contains("dimension") ? entry.at("dimension") : entry.at("dim");
      item.dimension = parse_dimension_field(dim.get<std::string>(), item.id);
      item.key = parse_key_json(entry.at("key"), item.id);
      item.source = entry.value("source", std::string{});
    } catch (const json::exception& e) {
      throw ConfigError(std::string("inventory item malformed: ") + e.what());
    }
    items.push_back(std::move(item));
  }
  return Inventory(std::move(name), std::move(items));
}

Inventory parse_inventory_csv(std::string_view text, std::string name) {
  auto rows = parse_csv_rows(text);
  if (rows.empty()) throw ConfigError("empty inventory");
  const auto& header = rows.front();
  auto column = [&](std::string_view col) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == col) return i;
    }
    throw ConfigError("csv header missing column '" + std::string(col) + "'");
  };
  const std::size_t id_col = column("id");
  const std::size_t stmt_col = column("statement");
  const std::size_t dim_col = column("dimension");
  const std::size_t key_col = column("key");
  std::size_t source_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == "source") source_col = i;
  }

  std::vector<InventoryItem> items;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t needed = std::max({id_col, stmt_col, dim_col, key_col}) + 1;
    if (row.size() < needed) {
      throw ConfigError("csv row " + std::to_string(r + 1) + ": expected " +
                        std::to_string(needed) + " fields");
    }
    InventoryItem item;
    item.id = trim(row[id_col]);
    item.statement = normalize_statement(row[stmt_col]);
    item.dimension = parse_dimension_field(row[dim_col], item.id);
    item.key = parse_key_text(row[key_col], item.id);
    if (source_col < row.size()) item.source = trim(row[source_col]);
    items.push_back(std::move(item));
  }
  return Inventory(std::move(name), std::move(items));
}

Inventory load_inventory(const std::filesystem::path& path, InventoryFormat format) {
  const std::string text = read_file(path);
  std::string name = path.stem().string();
  return format == InventoryFormat::Csv ? parse_inventory_csv(text, std::move(name))
                                        : parse_inventory_json(text, std::move(name));
}

Inventory load_inventory(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return load_inventory(path, ext == ".csv" ? InventoryFormat::Csv : InventoryFormat::Json);
}

std::vector<InventoryItem> item_pool(const Inventory& inv, Trait d) {
  std::vector<InventoryItem> pool;
  std::copy_if(inv.items().begin(), inv.items().end(), std::back_inserter(pool),
               [d](const InventoryItem& item) { return item.dimension == d; });
  return pool;
}

void PromptTemplate::validate() const {
  const auto placeholders = count_occurrences(body, kStatementPlaceholder);
  if (placeholders != 1) {
    throw ConfigError("template '" + id + "' must contain exactly one {statement} placeholder, found " +
                      std::to_string(placeholders));
  }
  if (count_occurrences(body, kOptionsPlaceholder) > 1) {
    throw ConfigError("template '" + id + "' repeats the {options} marker");
  }
  if (option_labels != kLikertLabels) {
    throw ConfigError("template '" + id + "': option labels must be the five Likert labels in A-E order");
  }
}

PromptTemplate parse_template_json(std::string_view text) {
  PromptTemplate tpl;
  try {
    const auto doc = json::parse(text);
    tpl.id = doc.at("id").get<std::string>();
    tpl.body = doc.at("body").get<std::string>();
    if (doc.contains("option_labels")) {
      const auto labels = doc.at("option_labels").get<std::vector<std::string>>();
      if (labels.size() != 5) {
        throw ConfigError("template '" + tpl.id + "' needs exactly five option labels");
      }
      std::copy(labels.begin(), labels.end(), tpl.option_labels.begin());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("template parse error: ") + e.what());
  }
  tpl.validate();
  return tpl;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  return parse_template_json(read_file(path));
}

const std::vector<PromptTemplate>& builtin_templates() {
  static const std::vector<PromptTemplate> templates = {
      {"gpt35",
       "Question:\n"
       "Given a statement of you: \"You {statement}.\"\n"
       "Please choose from the following options to identify how accurately this statement "
       "describes you.\n"
       "Options:\n"
       "{options}\n"
       "\n"
       "Answer:"},
      {"alpaca",
       "Below is an instruction that describes a task, paired with an input that provides "
       "further context. Write a response that appropriately completes the request.\n"
       "\n"
       "### Instruction:\n"
       "Given a statement of you. Please choose from the following options to identify how "
       "accurately this statement describes you.\n"
       "\n"
       "### Input:\n"
       "Statement: \"You {statement}.\"\n"
       "\n"
       "Options:\n"
       "{options}\n"
       "\n"
       "### Response:\n"},
      {"gpt-neo",
       "Given a description of you: \"You {statement}.\" What do you think?\n"
       "\n"
       "You can choose from the following options:\n"
       "\n"
       "{options}\n"
       "\n"
       "My answer: I think the best description of myself is option"},
      {"gpt-neox",
       "Question: Given the description of you: \"You {statement}.\" What do you think?\n"
       "Options:\n"
       "{options}\n"
       "Answer: I choose option"},
  };
  return templates;
}

const PromptTemplate& builtin_template(std::string_view id) {
  for (const auto& tpl : builtin_templates()) {
    if (tpl.id == id) return tpl;
  }
  throw ConfigError("unknown template '" + std::string(id) + "'");
}

std::string statement_sentence(const InventoryItem& item) {
  std::string s = item.statement;
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return "You " + s + ".";
}

std::string render_prompt(const InventoryItem& item, const PromptTemplate& tpl,
                          const RenderOptions& options) {
  tpl.validate();
  std::string lowered = item.statement;
  if (!lowered.empty()) {
    lowered[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(lowered[0])));
  }
  std::string out = tpl.body;
  if (options.explain) {
    // The anchor must be in the instruction, so only text outside the
    // statement is searched.
    const auto anchor = out.rfind(kExplainAnchor);
    if (anchor == std::string::npos) {
      throw ConfigError("template '" + tpl.id + "' has no instruction sentence to extend with \"and explain why\"");
    }
    out.insert(anchor + kExplainAnchor.size(), " and explain why");
  }
  replace_first(out, kStatementPlaceholder, lowered);
  replace_first(out, kOptionsPlaceholder, option_block(tpl.option_labels));
  return out;
}

}  // namespace mpi

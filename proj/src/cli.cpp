#include "mpi/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpi/errors.hpp"
#include "mpi/gateway.hpp"
#include "mpi/induction.hpp"
#include "mpi/inventory.hpp"
#include "mpi/rating_server.hpp"
#include "mpi/scoring.hpp"
#include "mpi/vignette.hpp"

namespace mpi {

using nlohmann::json;

namespace {

struct GlobalOptions {
  std::string profiles;
  std::uint64_t seed = 0;
};

std::filesystem::path cache_dir() {
  if (const char* dir = std::getenv("MPI_CACHE_DIR"); dir && *dir) return dir;
  return ".mpi-cache";
}

ModelProfile resolve_profile(const std::string& spec, const GlobalOptions& global) {
  if (auto inline_profile = parse_inline_profile(spec)) return *inline_profile;
  std::filesystem::path path = global.profiles;
  if (path.empty()) {
    if (const char* env = std::getenv("MPI_PROFILES"); env && *env) path = env;
  }
  if (path.empty()) path = "profiles.json";
  if (!std::filesystem::exists(path)) {
    throw ConfigError("model '" + spec + "' is not an inline profile and no profiles file was found at " +
                      path.string());
  }
  for (auto& p : load_profiles(path)) {
    if (p.name == spec) return p;
  }
  throw ConfigError("no profile named '" + spec + "' in " + path.string());
}

std::unique_ptr<Gateway> make_gateway(ModelProfile profile,
                                      std::shared_ptr<const Inventory> inventory = nullptr) {
  if (profile.persona && inventory) profile.persona->inventory = std::move(inventory);
  std::shared_ptr<ReplayStore> store;
  if (profile.is_http() || profile.kind == ProfileKind::Replay) {
    const auto path = profile.store ? *profile.store : cache_dir() / (profile.name + ".jsonl");
    store = std::make_shared<ReplayStore>(path);
  }
  return std::make_unique<Gateway>(std::move(profile), std::move(store));
}

PromptTemplate resolve_template(const std::string& requested, const ModelProfile& profile) {
  const std::string id = requested.empty() ? profile.template_id : requested;
  if (std::filesystem::exists(id) && std::filesystem::is_regular_file(id)) return load_template(id);
  return builtin_template(id);
}

Trait require_trait(const std::string& text) {
  auto t = parse_trait(text);
  if (!t) throw ConfigError("unknown trait '" + text + "' (expected O, C, E, A or N)");
  return *t;
}

Polarity require_polarity(const std::string& text) {
  auto p = parse_polarity(text);
  if (!p) throw ConfigError("unknown polarity '" + text + "' (expected + or -)");
  return *p;
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = canonical_dump(doc);
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

std::vector<std::string> read_word_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::string> words;
  try {
    const auto doc = json::parse(text);
    if (doc.is_array()) return doc.get<std::vector<std::string>>();
    if (doc.is_object() && doc.contains("top")) return doc.at("top").get<std::vector<std::string>>();
    throw ConfigError(path.string() + ": expected a JSON array of words");
  } catch (const json::parse_error&) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      auto e = line.find_last_not_of(" \t\r");
      words.push_back(line.substr(b, e - b + 1));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return words;
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string model, inventory, template_id, persona_prompt, out;
  bool explain = false;
  bool compare_human = false;
  double max_invalid = 0.2;
  double mean_tolerance = 0.1;
  double sigma_tolerance = 0.1;
};

int cmd_evaluate(const EvaluateArgs& a, const GlobalOptions& global, std::ostream& out) {
  auto inventory = std::make_shared<const Inventory>(load_inventory(a.inventory));
  auto profile = resolve_profile(a.model, global);
  const auto tpl = resolve_template(a.template_id, profile);
  auto gateway = make_gateway(std::move(profile), inventory);

  AdministerOptions options;
  options.explain = a.explain;
  options.max_invalid_fraction = a.max_invalid;
  std::optional<PersonalityPrompt> pp;
  if (!a.persona_prompt.empty()) {
    pp = load_personality_prompt(a.persona_prompt);
    options.persona_prefix = pp->final_prefix;
  }

  const auto responses = administer(*gateway, *inventory, tpl, options);
  auto report = score_responses(responses, *inventory, gateway->profile().name);
  report.induction = pp;

  json doc = to_json(report);
  if (a.compare_human) {
    doc["human_comparison"] = to_json(
        compare_to_human(report, human_reference(), {a.mean_tolerance, a.sigma_tolerance}));
  }
  if (a.explain) {
    json rows = json::array();
    for (const auto& r : responses) {
      rows.push_back({{"item_id", r.item_id},
                      {"choice", r.parsed ? json(std::string(1, choice_letter(*r.parsed))) : json(nullptr)},
                      {"explanation", r.explanation ? json(*r.explanation) : json(nullptr)}});
    }
    doc["responses"] = rows;
  }
  emit(doc, a.out, out);
  return kExitOk;
}

// induce --------------------------------------------------------------------

struct InduceArgs {
  std::string method, trait, polarity, model, lexicon, out;
  std::string words, inventory, candidates, template_id;
  std::size_t k = 3;
};

TraitLexicon resolve_lexicon(const std::string& path) {
  return path.empty() ? default_lexicon() : load_lexicon(path);
}

int cmd_induce(const InduceArgs& a, const GlobalOptions& global, std::ostream& out) {
  const InductionTarget target{require_trait(a.trait), require_polarity(a.polarity)};
  const auto lex = resolve_lexicon(a.lexicon);
  const auto method = parse_method(a.method);

  PersonalityPrompt pp;
  switch (method) {
    case InductionMethod::Naive:
      pp = naive_personality(target, lex);
      break;
    case InductionMethod::P2: {
      if (a.model.empty()) throw ConfigError("--method p2 needs --model");
      auto gateway = make_gateway(resolve_profile(a.model, global));
      pp = p2_chain(*gateway, target, lex);
      break;
    }
    case InductionMethod::Words: {
      std::vector<std::string> words;
      if (!a.words.empty()) {
        words = parse_word_list(a.words);
      } else {
        if (a.model.empty() || a.inventory.empty()) {
          throw ConfigError("--method words needs --words, or --model with --inventory to search");
        }
        auto inventory = std::make_shared<const Inventory>(load_inventory(a.inventory));
        auto profile = resolve_profile(a.model, global);
        const auto tpl = resolve_template(a.template_id, profile);
        auto gateway = make_gateway(std::move(profile), inventory);
        const auto candidates =
            a.candidates.empty() ? lex[target.dimension].candidates : read_word_file(a.candidates);
        words = word_search(*gateway, *inventory, tpl, target.dimension, candidates, {a.k}).top;
      }
      pp = words_personality(target, lex, words);
      break;
    }
  }
  pp.validate();
  emit(to_json(pp), a.out, out);
  return kExitOk;
}

// search-words --------------------------------------------------------------

struct SearchArgs {
  std::string model, trait, candidates, inventory, template_id, out;
  std::size_t k = 3;
};

int cmd_search_words(const SearchArgs& a, const GlobalOptions& global, std::ostream& out) {
  const Trait dim = require_trait(a.trait);
  auto inventory = std::make_shared<const Inventory>(load_inventory(a.inventory));
  auto profile = resolve_profile(a.model, global);
  const auto tpl = resolve_template(a.template_id, profile);
  auto gateway = make_gateway(std::move(profile), inventory);
  const auto candidates = read_word_file(a.candidates);
  const auto result = word_search(*gateway, *inventory, tpl, dim, candidates, {a.k});
  emit(to_json(result), a.out, out);
  return kExitOk;
}

// vignette ------------------------------------------------------------------

struct VignetteArgs {
  std::string session, model, lexicon, out, host = "127.0.0.1", static_dir;
  std::vector<std::string> prompts;
  int port = 8080;
  bool force = false;
};

int cmd_vignette_generate(const VignetteArgs& a, const GlobalOptions& global, std::ostream& out) {
  if (a.model.empty()) throw ConfigError("vignette generate needs --model");
  const SessionDir dir{a.session};
  if (std::filesystem::exists(dir.ratings()) && std::filesystem::file_size(dir.ratings()) > 0 &&
      !a.force) {
    throw ConfigError(dir.ratings().string() + " already holds ratings; pass --force to regenerate");
  }
  const auto lex = resolve_lexicon(a.lexicon);
  auto gateway = make_gateway(resolve_profile(a.model, global));

  std::map<std::pair<Trait, Polarity>, PersonalityPrompt> induced;
  for (const auto& path : a.prompts) {
    auto pp = load_personality_prompt(path);
    induced[{pp.target.dimension, pp.target.polarity}] = std::move(pp);
  }
  for (Trait t : kAllTraits) {
    for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
      if (!induced.count({t, p})) induced[{t, p}] = p2_chain(*gateway, {t, p}, lex);
    }
  }

  // Cells in O..N order, each as positive, neutral, negative.
  std::vector<std::optional<PersonalityPrompt>> cells;
  for (Trait t : kAllTraits) {
    cells.emplace_back(induced.at({t, Polarity::Positive}));
    cells.emplace_back(std::nullopt);
    cells.emplace_back(induced.at({t, Polarity::Negative}));
  }
  std::vector<std::future<Essay>> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& ctx = builtin_contexts()[i / 3];
    pending.push_back(std::async(std::launch::async, [&, i, ctx] {
      return generate_essay(*gateway, cells[i], ctx);
    }));
  }
  std::vector<Essay> essays;
  for (auto& f : pending) essays.push_back(f.get());

  const auto session = build_questionnaire(essays, global.seed);
  std::filesystem::create_directories(dir.root);
  json essays_doc = json::array();
  for (const auto& e : essays) essays_doc.push_back(to_json(e));
  write_text_file(dir.essays(), canonical_dump(essays_doc));
  write_text_file(dir.session(), canonical_dump(to_json(session)));
  if (a.force && std::filesystem::exists(dir.ratings())) std::filesystem::remove(dir.ratings());
  out << "session " << session.id << ": " << essays.size() << " essays, "
      << session.comparisons.size() << " comparisons in " << dir.root.string() << "\n";
  return kExitOk;
}

int cmd_vignette_serve(const VignetteArgs& a, std::ostream& out) {
  std::optional<std::filesystem::path> assets;
  if (!a.static_dir.empty()) assets = a.static_dir;
  RatingServer server(SessionDir{a.session}, assets);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw ConfigError("cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "serving session " << load_session(SessionDir{a.session}.session()).id << " on http://"
      << a.host << ":" << port << "\n"
      << std::flush;
  server.serve();
  return kExitOk;
}

int cmd_vignette_report(const VignetteArgs& a, std::ostream& out) {
  const SessionDir dir{a.session};
  const auto session = load_session(dir.session());
  const RatingStore store(dir.ratings());
  const auto report = success_rates(session, store.records());
  const std::string text = canonical_dump(to_json(report));
  write_text_file(a.out.empty() ? dir.report() : std::filesystem::path(a.out), text);
  out << text;
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Machine personality inventory: evaluate, induce and study model personality", "mpi"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--profiles", global.profiles, "Profiles file (JSON array of model profiles)");
  app.add_option("--seed", global.seed, "Seed for randomized study layout");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Administer an inventory and write an OCEAN report");
  evaluate->add_option("--model", ev.model, "Profile name or inline profile")->required();
  evaluate->add_option("--inventory", ev.inventory, "Item bank (.json or .csv)")->required();
  evaluate->add_option("--template", ev.template_id, "Built-in template id or template file");
  evaluate->add_option("--persona-prompt", ev.persona_prompt, "PersonalityPrompt file to prepend");
  evaluate->add_flag("--explain", ev.explain, "Ask the model to explain each answer");
  evaluate->add_flag("--compare-human", ev.compare_human, "Add a comparison with human averages");
  evaluate->add_option("--max-invalid", ev.max_invalid, "Abort above this invalid fraction");
  evaluate->add_option("--mean-tolerance", ev.mean_tolerance, "Closeness threshold for means");
  evaluate->add_option("--sigma-tolerance", ev.sigma_tolerance, "Closeness threshold for sigma");
  evaluate->add_option("--out", ev.out, "Output file (default stdout)");

  InduceArgs in;
  auto* induce = app.add_subcommand("induce", "Build a personality-inducing prompt");
  induce->add_option("--method", in.method, "p2, naive or words")->required();
  induce->add_option("--trait", in.trait, "O, C, E, A or N")->required();
  induce->add_option("--polarity", in.polarity, "+ or -")->required();
  induce->add_option("--model", in.model, "Profile name or inline profile");
  induce->add_option("--lexicon", in.lexicon, "Lexicon file overriding the defaults");
  induce->add_option("--words", in.words, "Comma-separated words for the words method");
  induce->add_option("--inventory", in.inventory, "Short inventory for the words search");
  induce->add_option("--candidates", in.candidates, "Candidate word file for the words search");
  induce->add_option("--template", in.template_id, "Template for the words search");
  induce->add_option("-k", in.k, "Number of words for the words method");
  induce->add_option("--out", in.out, "Output file (default stdout)");

  SearchArgs sw;
  auto* search = app.add_subcommand("search-words", "Rank candidate trait words");
  search->add_option("--eval-model", sw.model, "Profile used to score candidates")->required();
  search->add_option("--trait", sw.trait, "O, C, E, A or N")->required();
  search->add_option("--candidates", sw.candidates, "Candidate word file")->required();
  search->add_option("--inventory", sw.inventory, "Short inventory used for scoring")->required();
  search->add_option("-k", sw.k, "Number of words to keep");
  search->add_option("--template", sw.template_id, "Built-in template id or template file");
  search->add_option("--out", sw.out, "Output file (default stdout)");

  VignetteArgs vg;
  auto* vignette = app.add_subcommand("vignette", "Vignette rating study");
  vignette->require_subcommand(1);
  auto* generate = vignette->add_subcommand("generate", "Generate essays and the questionnaire");
  auto* serve = vignette->add_subcommand("serve", "Serve the rating API");
  auto* report = vignette->add_subcommand("report", "Compute success rates from ratings");
  for (auto* sub : {generate, serve, report}) {
    sub->add_option("--session", vg.session, "Session directory")->required();
  }
  generate->add_option("--model", vg.model, "Profile that writes the essays");
  generate->add_option("--prompt", vg.prompts, "PersonalityPrompt file (repeatable)");
  generate->add_option("--lexicon", vg.lexicon, "Lexicon for prompts built on the fly");
  generate->add_flag("--force", vg.force, "Regenerate even if ratings exist (discards them)");
  serve->add_option("--port", vg.port, "Port (0 picks a free one)");
  serve->add_option("--host", vg.host, "Bind address");
  serve->add_option("--static", vg.static_dir, "Directory with the rater UI assets");
  report->add_option("--out", vg.out, "Report path (default SESSION/report.json)");

  std::vector<const char*> argv{"mpi"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*evaluate) return cmd_evaluate(ev, global, out);
    if (*induce) return cmd_induce(in, global, out);
    if (*search) return cmd_search_words(sw, global, out);
    if (*generate) return cmd_vignette_generate(vg, global, out);
    if (*serve) return cmd_vignette_serve(vg, out);
    if (*report) return cmd_vignette_report(vg, out);
  } catch (const InvalidResponsesError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidResponses;
  } catch (const GatewayError& e) {
    err << "error: " << e.what() << "\n";
    return kExitGateway;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace mpi

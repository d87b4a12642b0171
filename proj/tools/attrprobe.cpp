// attrprobe: command-line entry point.
//
// Every command validates its inputs, computes, then commits all of its
// artifacts plus a run manifest in one step. Exit codes: 0 success, 1 compute
// error, 2 invalid configuration or arguments.

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "attrprobe/contextualizer.hpp"
#include "attrprobe/data_selector.hpp"
#include "attrprobe/downstream.hpp"
#include "attrprobe/embedding_store.hpp"
#include "attrprobe/error.hpp"
#include "attrprobe/fusion.hpp"
#include "attrprobe/io.hpp"
#include "attrprobe/kg_store.hpp"
#include "attrprobe/norm_data.hpp"
#include "attrprobe/probe.hpp"
#include "attrprobe/rng.hpp"
#include "attrprobe/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace attrprobe;

namespace {

struct Global {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// What a command produced: artifacts keyed by name relative to the manifest.
struct Run {
  std::string command;
  json config = json::object();
  fs::path manifest;
  std::vector<std::pair<std::string, std::string>> artifacts;
};

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  return out;
}

json versions() {
  return {{"attrprobe", ATTRPROBE_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION}};
}

void commit(const Run& run, const Global& global) {
  const fs::path dir = run.manifest.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  ArtifactSet set;
  json listed = json::array();
  for (const auto& [name, content] : run.artifacts) {
    listed.push_back({{"path", name}, {"bytes", content.size()}, {"fnv1a", fnv1a_hex(content)}});
    set.add(dir / name, content);
  }
  json config = run.config;
  config["seed"] = global.seed;
  json manifest = {{"tool", "attrprobe"},
                   {"command", run.command},
                   {"seed", global.seed},
                   {"threads", global.threads},
                   {"config", config},
                   {"config_hash", fnv1a_hex(config.dump())},
                   {"versions", versions()},
                   {"artifacts", listed}};
  set.add(run.manifest, manifest.dump(2) + "\n");
  set.commit();
}

/// "out/subset.jsonl" -> "out/subset.<suffix>"
fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + "." + suffix);
}

std::unordered_set<std::string> dataset_tokens(const NormDataset& dataset) {
  std::unordered_set<std::string> vocab;
  for (const auto& attribute : dataset.attributes()) vocab.insert(attribute.tokens.begin(), attribute.tokens.end());
  for (const auto& object : dataset.objects()) {
    for (auto& token : split_words(object)) vocab.insert(std::move(token));
  }
  return vocab;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "attrprobe: warning: " << w << '\n';
}

std::string key_list(const std::vector<std::string>& keys) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(keys.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", '" : "'") + keys[i] + "'";
  if (keys.size() > shown) out += ", ... (" + std::to_string(keys.size() - shown) + " more)";
  return out;
}

// ---------------------------------------------------------------------------
// contextualize

struct ContextualizeArgs {
  std::string norms;
  double min_freq = 2.0;
  std::string exclusions;
  std::string contextualizer_config;
  std::string out;
};

Run run_contextualize(const ContextualizeArgs& args) {
  LoadOptions load;
  load.min_production_frequency = args.min_freq;
  NormDataset dataset = load_norms(args.norms, load);
  if (!args.exclusions.empty()) {
    FilterOptions filter;
    filter.exclusions = load_exclusion_list(args.exclusions);
    std::vector<std::string> warnings;
    dataset = filter_attributes(dataset, dataset_tokens(dataset), filter, &warnings);
    print_warnings(warnings);
  }
  ContextualizerConfig config;
  if (!args.contextualizer_config.empty()) config = ContextualizerConfig::load(args.contextualizer_config);

  std::vector<json> rows;
  for (const auto& pair : contextualize_all(dataset, config)) {
    rows.push_back({{"object", dataset.objects()[pair.object]},
                    {"attribute", dataset.attributes()[pair.attribute].name()},
                    {"sentence", pair.sentence}});
  }
  std::cerr << "attrprobe: " << rows.size() << " sentences\n";

  Run run;
  run.command = "contextualize";
  run.config = {{"norms", args.norms},
                {"min_freq", args.min_freq},
                {"exclusions", args.exclusions},
                {"contextualizer_config", args.contextualizer_config},
                {"out", args.out}};
  const fs::path out(args.out);
  run.manifest = sibling(out, "manifest.json");
  run.artifacts.emplace_back(out.filename().string(), jsonl(rows));
  return run;
}

// ---------------------------------------------------------------------------
// probe

struct ProbeArgs {
  std::string norms;
  double min_freq = 2.0;
  std::string mode = "static";
  std::string static_vectors;
  std::string embed_cache;
  std::string embed_url;
  std::size_t embed_batch = 64;
  std::string contextualizer_config;
  std::string exclusions;
  bool strict = false;
  std::vector<std::string> kg;
  std::optional<std::uint64_t> kg_seed;
  std::size_t kg_dim = 10;
  double kg_init_range = 1.0;
  bool kg_only = false;
  std::string baseline;
  std::string label;
  double l2 = 1.0;
  std::string out;
};

Run run_probe_command(const ProbeArgs& args, const Global& global) {
  const FeatureMode mode = parse_feature_mode(args.mode);
  if (mode == FeatureMode::Static && args.static_vectors.empty()) {
    throw ConfigError("static mode needs --static-vectors");
  }
  if (mode == FeatureMode::Contextual && args.embed_cache.empty() && args.embed_url.empty()) {
    throw ConfigError("contextual mode needs --embed-cache or --embed-url");
  }
  if (args.kg_only && args.kg.empty()) throw ConfigError("--kg-only needs --kg");
  if (args.kg_dim == 0) throw ConfigError("--kg-dim must be positive");

  LoadOptions load;
  load.min_production_frequency = args.min_freq;
  const NormDataset raw = load_norms(args.norms, load);

  std::shared_ptr<const StaticVectors> vectors;
  if (!args.static_vectors.empty()) {
    vectors = std::make_shared<StaticVectors>(StaticVectors::load(args.static_vectors));
    print_warnings(vectors->warnings());
  }
  FilterOptions filter;
  filter.strict = args.strict;
  if (!args.exclusions.empty()) filter.exclusions = load_exclusion_list(args.exclusions);
  std::vector<std::string> warnings;
  const NormDataset dataset =
      filter_attributes(raw, vectors ? vectors->vocabulary() : dataset_tokens(raw), filter, &warnings);
  print_warnings(warnings);
  if (dataset.n_attributes() == 0) throw Error("no attributes left to probe");
  std::cerr << "attrprobe: probing " << dataset.n_attributes() << " attributes over " << dataset.n_objects()
            << " objects\n";

  ContextualizerConfig contextualizer;
  if (!args.contextualizer_config.empty()) {
    contextualizer = ContextualizerConfig::load(args.contextualizer_config);
  }
  std::shared_ptr<EmbeddingCache> cache;
  if (!args.embed_cache.empty()) cache = std::make_shared<EmbeddingCache>(fs::path(args.embed_cache));
  std::shared_ptr<const EmbeddingClient> client;
  if (!args.embed_url.empty() && mode == FeatureMode::Contextual) {
    ClientOptions options;
    options.max_batch = args.embed_batch;
    options.parallelism = std::max<std::size_t>(global.threads, 1);
    client = std::make_shared<EmbeddingClient>(args.embed_url, options);
  }
  EmbeddingStore store(vectors, cache, client, contextualizer);

  FeatureProvider features;
  std::size_t dim = 0;
  if (mode == FeatureMode::Static) {
    std::vector<std::string> missing;
    for (const auto& object : dataset.objects()) {
      if (!vectors->contains(object)) missing.push_back(object);
    }
    if (!missing.empty()) throw Error("missing static vectors for objects " + key_list(missing));
    dim = vectors->dim();
    auto matrix = std::make_shared<Eigen::MatrixXd>(dataset.n_objects(), dim);
    for (std::size_t o = 0; o < dataset.n_objects(); ++o) {
      const Vector v = *vectors->find(dataset.objects()[o]);
      for (std::size_t j = 0; j < dim; ++j) (*matrix)(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(j)) = v[j];
    }
    features = [matrix](std::size_t) { return *matrix; };
  } else {
    std::vector<std::string> sentences;
    for (const auto& pair : contextualize_all(dataset, contextualizer)) sentences.push_back(pair.sentence);
    if (!client) {
      std::vector<std::string> missing;
      std::set<std::string> seen;
      for (const auto& s : sentences) {
        if (!store.cache()->contains(s) && seen.insert(s).second) missing.push_back(s);
      }
      if (!missing.empty()) throw Error("missing contextual vectors for sentences " + key_list(missing));
    } else {
      const std::size_t fetched = store.prefetch(sentences);
      if (fetched) std::cerr << "attrprobe: fetched " << fetched << " sentence vectors\n";
    }
    dim = store.dim(FeatureMode::Contextual);
    features = [&dataset, &store](std::size_t a) {
      const auto& attribute = dataset.attributes()[a];
      Eigen::MatrixXd x;
      for (std::size_t o = 0; o < dataset.n_objects(); ++o) {
        const Vector v = store.pair_vector(dataset.objects()[o], attribute.tokens, FeatureMode::Contextual);
        if (o == 0) x.resize(static_cast<Eigen::Index>(dataset.n_objects()), static_cast<Eigen::Index>(v.size()));
        x.row(static_cast<Eigen::Index>(o)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      return x;
    };
  }

  std::optional<KgStore> kg;
  std::optional<KgAugmentation> augmentation;
  const std::uint64_t kg_seed = args.kg_seed.value_or(global.seed);
  if (!args.kg.empty()) {
    std::vector<fs::path> paths(args.kg.begin(), args.kg.end());
    kg = KgStore::load(paths);
    print_warnings(kg->warnings());
    augmentation = KgAugmentation{&*kg, kg_seed, args.kg_dim, args.kg_init_range, args.kg_only};
  }

  ProbeOptions options;
  options.threads = global.threads;
  options.logistic.inverse_regularization = args.l2;
  FitReport report = run_probe(dataset, features, dim, augmentation, options);
  std::vector<std::pair<std::string, std::string>> header = {
      {"mode", args.mode}, {"feature_dim", std::to_string(dim)}, {"seed", std::to_string(global.seed)}};
  if (augmentation) header.emplace_back("relation_dim_note", "probe default 10; fusion head default 30");
  header.insert(header.end(), report.header.begin(), report.header.end());
  report.header = std::move(header);

  std::string label = args.label;
  if (label.empty()) label = args.mode + (args.kg_only ? "-kg-only" : augmentation ? "+kg" : "");
  std::vector<std::pair<std::string, FitReport>> sources;

  Run run;
  run.command = "probe";
  run.config = {{"norms", args.norms},
                {"min_freq", args.min_freq},
                {"mode", args.mode},
                {"static_vectors", args.static_vectors},
                {"embed_cache", args.embed_cache},
                {"embed_url", args.embed_url},
                {"contextualizer_config", args.contextualizer_config},
                {"exclusions", args.exclusions},
                {"strict", args.strict},
                {"kg", args.kg},
                {"kg_seed", kg_seed},
                {"kg_dim", args.kg_dim},
                {"kg_init_range", args.kg_init_range},
                {"kg_only", args.kg_only},
                {"baseline", args.baseline},
                {"label", label},
                {"l2", args.l2},
                {"out", args.out}};
  run.manifest = fs::path(args.out) / "manifest.json";
  run.artifacts.emplace_back("fit.csv", fit_csv(report));
  if (!args.baseline.empty()) {
    FitReport baseline = load_fit_csv(args.baseline);
    run.artifacts.emplace_back("delta.csv", delta_csv(delta_report(baseline, report)));
    sources.emplace_back("baseline", std::move(baseline));
  }
  sources.emplace_back(label, report);
  run.artifacts.emplace_back("categories.csv", category_table_csv(sources));
  run.artifacts.emplace_back("swarm.json", swarm_json(sources).dump(2) + "\n");
  run.artifacts.emplace_back("dataset.json", to_json(dataset).dump() + "\n");

  std::cerr << "attrprobe: overall median fit " << format_double(report.overall_median) << '\n';
  return run;
}

// ---------------------------------------------------------------------------
// kg-query

struct KgQueryArgs {
  std::string prompt_file;
  std::vector<std::string> kb;
  std::string out;
};

Run run_kg_query(const KgQueryArgs& args, const Global& global) {
  std::vector<fs::path> paths(args.kb.begin(), args.kb.end());
  const KgStore store = KgStore::load(paths);
  print_warnings(store.warnings());
  const auto& relations = store.relations();

  std::istringstream prompts(read_file(args.prompt_file));
  Rng rng(derive_seed(global.seed, "kg-query"));
  std::vector<json> rows;
  std::string line;
  while (std::getline(prompts, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (normalize(line).empty()) continue;
    const auto tokens = tokenize(line);
    const auto per_word = store.query_prompt(tokens);
    json words = json::array();
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      json matches = json::array();
      for (const auto& m : per_word[p]) {
        const auto& t = store.triples()[m.triple];
        matches.push_back({{"start", join(t.start)},
                           {"relation", t.relation},
                           {"end", join(t.end)},
                           {"kb", relations.kbs()[t.kb]},
                           {"relation_id", m.relation_id}});
      }
      json sampled = nullptr;
      if (auto pick = sample_relation(per_word[p], rng)) sampled = pick->relation_id;
      words.push_back({{"word", tokens[p]}, {"matches", matches}, {"sampled_relation_id", sampled}});
    }
    rows.push_back({{"prompt", line}, {"words", words}});
  }

  json table = json::array();
  for (std::size_t id = 0; id < relations.size(); ++id) {
    auto [kb, relation] = relations.describe(id);
    table.push_back({{"id", id}, {"kb", kb}, {"relation", relation}});
  }

  Run run;
  run.command = "kg-query";
  run.config = {{"prompt_file", args.prompt_file}, {"kb", args.kb}, {"out", args.out}};
  const fs::path out(args.out);
  run.manifest = sibling(out, "manifest.json");
  run.artifacts.emplace_back(out.filename().string(), jsonl(rows));
  run.artifacts.emplace_back(sibling(out, "relations.json").filename().string(), table.dump(2) + "\n");
  std::cerr << "attrprobe: " << rows.size() << " prompts, " << relations.size() << " relations\n";
  return run;
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
  std::string corpus;
  std::string fit_report;
  double threshold = 1.0;
  std::vector<std::string> stop_words;
  std::string out;
};

Run run_select(const SelectArgs& args, const Global& global) {
  const auto corpus = load_corpus(args.corpus);
  const FitReport report = load_fit_csv(args.fit_report);
  const DeficiencySpec spec = DeficiencySpec::from_report(report, args.threshold);
  SelectorConfig config;
  if (!args.stop_words.empty()) {
    config.stop_words.clear();
    for (const auto& w : args.stop_words) config.stop_words.insert(normalize(w));
  }
  const Selection selection = select_subset(corpus, spec, config, global.threads);

  std::map<std::size_t, std::string> names;
  for (const auto& a : spec.attributes) names[a.id] = a.name();
  for (auto id : selection.unusable) {
    std::cerr << "attrprobe: warning: attribute '" << names[id] << "' has no content words and selects nothing\n";
  }

  std::vector<json> kept;
  std::vector<json> provenance;
  for (std::size_t i = 0; i < selection.kept.size(); ++i) {
    const auto& datum = corpus[selection.kept[i]];
    kept.push_back(to_json(datum));
    json matched = json::array();
    for (auto id : selection.provenance[i]) matched.push_back({{"id", id}, {"name", names[id]}});
    provenance.push_back({{"id", datum.id}, {"attributes", matched}});
  }
  std::cerr << "attrprobe: kept " << kept.size() << " of " << corpus.size() << " items using "
            << spec.attributes.size() << " deficient attributes\n";

  Run run;
  run.command = "select";
  json stop(config.stop_words);
  run.config = {{"corpus", args.corpus},
                {"fit_report", args.fit_report},
                {"threshold", args.threshold},
                {"stop_words", stop},
                {"out", args.out}};
  const fs::path out(args.out);
  run.manifest = sibling(out, "manifest.json");
  run.artifacts.emplace_back(out.filename().string(), jsonl(kept));
  run.artifacts.emplace_back(sibling(out, "provenance.jsonl").filename().string(), jsonl(provenance));
  return run;
}

// ---------------------------------------------------------------------------
// correlate

struct CorrelateArgs {
  std::string links;
  std::string fit_report;
  std::size_t n_boot = 1000;
  double ci = 0.90;
  std::size_t grid = 101;
  bool weighted = false;
  std::string out;
};

Run run_correlate(const CorrelateArgs& args, const Global& global) {
  if (!(args.ci > 0.0 && args.ci < 1.0)) throw ConfigError("--ci must lie in (0, 1)");
  if (args.n_boot == 0) throw ConfigError("--n-boot must be positive");
  const auto links = load_links(args.links);
  const FitReport report = load_fit_csv(args.fit_report);
  const auto accuracy = per_attribute_accuracy(links, outcomes_from_links(links));

  std::vector<RegressionPoint> points;
  json scatter = json::array();
  for (const auto& [id, acc] : accuracy) {
    if (id >= report.per_attribute.size()) {
      throw Error("links reference attribute id " + std::to_string(id) + " but the fit report has " +
                  std::to_string(report.per_attribute.size()) + " attributes");
    }
    const auto& fit = report.per_attribute[id];
    points.push_back({fit.f1, acc.accuracy, static_cast<double>(acc.total)});
    scatter.push_back({{"attribute_id", id},
                       {"attribute", fit.name},
                       {"category", std::string(to_string(fit.category))},
                       {"fit", fit.f1},
                       {"accuracy", acc.accuracy},
                       {"questions", acc.total}});
  }
  BootstrapOptions options;
  options.resamples = args.n_boot;
  options.confidence = args.ci;
  options.grid_points = args.grid;
  options.weighted = args.weighted;
  Rng rng(derive_seed(global.seed, "bootstrap"));
  const RegressionFit fit = bootstrap_linreg(points, rng, options);

  json result = {{"points", scatter},
                 {"regression", to_json(fit)},
                 {"n_questions", links.size()},
                 {"n_attributes", points.size()}};
  Run run;
  run.command = "correlate";
  run.config = {{"links", args.links},     {"fit_report", args.fit_report}, {"n_boot", args.n_boot},
                {"ci", args.ci},           {"grid", args.grid},             {"weighted", args.weighted},
                {"out", args.out}};
  run.manifest = fs::path(args.out) / "manifest.json";
  run.artifacts.emplace_back("regression.json", result.dump(2) + "\n");
  std::cerr << "attrprobe: slope " << format_double(fit.slope) << ", intercept " << format_double(fit.intercept)
            << " over " << points.size() << " attributes\n";
  return run;
}

// ---------------------------------------------------------------------------
// fusion-train

struct FusionArgs {
  std::string train;
  std::string dev;
  std::size_t relations = 0;
  std::size_t relation_dim = 30;
  std::size_t hidden = 32;
  std::size_t epochs = 4;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::string out;
};

Run run_fusion(const FusionArgs& args, const Global& global) {
  if (args.hidden == 0 || args.relation_dim == 0 || args.batch_size == 0) {
    throw ConfigError("--hidden, --relation-dim and --batch-size must be positive");
  }
  if (!(args.lr > 0.0)) throw ConfigError("--lr must be positive");
  const auto train = load_fusion_data(args.train);
  const auto dev = load_fusion_data(args.dev);
  if (train.empty()) throw Error(args.train + ": no training examples");

  FusionConfig config;
  config.relation_dim = args.relation_dim;
  config.hidden = args.hidden;
  config.sequence_dim = static_cast<std::size_t>(train.front().answers[0].sequence.size());
  std::size_t max_id = 0;
  bool any = false;
  for (const auto* set : {&train, &dev}) {
    for (const auto& ex : *set) {
      for (const auto& answer : ex.answers) {
        for (const auto& word : answer.word_relations) {
          for (auto id : word) {
            max_id = std::max(max_id, id);
            any = true;
          }
        }
      }
    }
  }
  config.relations = args.relations ? args.relations : (any ? max_id + 1 : 1);
  if (any && max_id >= config.relations) {
    throw ConfigError("relation id " + std::to_string(max_id) + " exceeds --relations " +
                      std::to_string(config.relations));
  }

  FusionTrainOptions options;
  options.epochs = args.epochs;
  options.batch_size = args.batch_size;
  options.learning_rate = args.lr;
  options.seed = global.seed;
  const auto result = fusion_train(config, train, dev, options);
  for (const auto& e : result.epochs) {
    std::cerr << "attrprobe: epoch " << e.epoch << " loss " << format_double(e.train_loss) << " dev accuracy "
              << format_double(e.dev_accuracy) << '\n';
  }

  json head = result.head.to_json();
  head["relation_dim_note"] = "fusion head default 30; probe augmentation default 10";
  Run run;
  run.command = "fusion-train";
  run.config = {{"train", args.train},
                {"dev", args.dev},
                {"relations", config.relations},
                {"relation_dim", args.relation_dim},
                {"hidden", args.hidden},
                {"epochs", args.epochs},
                {"batch_size", args.batch_size},
                {"lr", args.lr},
                {"out", args.out}};
  run.manifest = fs::path(args.out) / "manifest.json";
  run.artifacts.emplace_back("head.json", head.dump() + "\n");
  run.artifacts.emplace_back("training_log.csv", training_log_csv(result.epochs));
  return run;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> fits;
  double small = 0.15;
  double large = 0.3;
  std::string out;
};

Run run_report(const ReportArgs& args) {
  std::vector<std::pair<std::string, FitReport>> sources;
  for (const auto& spec : args.fits) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw ConfigError("--fit expects NAME=PATH, got '" + spec + "'");
    }
    const std::string path = spec.substr(eq + 1);
    if (!fs::is_regular_file(path)) throw ConfigError("fit report not found: " + path);
    sources.emplace_back(spec.substr(0, eq), load_fit_csv(path));
  }
  Run run;
  run.command = "report";
  run.config = {{"fit", args.fits}, {"small", args.small}, {"large", args.large}, {"out", args.out}};
  run.manifest = fs::path(args.out) / "manifest.json";
  run.artifacts.emplace_back("categories.csv", category_table_csv(sources));
  run.artifacts.emplace_back("swarm.json", swarm_json(sources).dump(2) + "\n");
  if (sources.size() == 2) {
    const auto deltas = delta_report(sources[0].second, sources[1].second, {args.small, args.large});
    run.artifacts.emplace_back("delta.csv", delta_csv(deltas));
  }
  return run;
}

bool argv_has(int argc, char** argv, const char* flag) {
  const std::size_t n = std::strlen(flag);
  for (int i = 1; i < argc; ++i) {
    if (std::strncmp(argv[i], flag, n) == 0 && (argv[i][n] == '\0' || argv[i][n] == '=')) return true;
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute probing toolkit for semantic norm data", "attrprobe"};
  app.set_version_flag("--version", ATTRPROBE_VERSION);
  app.set_config("--config", "", "key=value config file; [command] sections hold per-command options");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  Global global;
  app.add_option("--seed", global.seed, "Global seed; every random stream derives from it")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads (0 = all cores)")->capture_default_str();

  auto existing = CLI::ExistingFile;

  ContextualizeArgs ctx;
  auto* ctx_cmd = app.add_subcommand("contextualize", "Write one sentence per (object, attribute) pair");
  ctx_cmd->fallthrough();
  ctx_cmd->add_option("--norms", ctx.norms, "Norm TSV")->required()->check(existing);
  ctx_cmd->add_option("--min-freq", ctx.min_freq, "Minimum production frequency")->capture_default_str();
  ctx_cmd->add_option("--exclusions", ctx.exclusions, "Attribute exclusion list")->check(existing);
  ctx_cmd->add_option("--contextualizer-config", ctx.contextualizer_config, "Contextualizer JSON")->check(existing);
  ctx_cmd->add_option("--out", ctx.out, "Output JSONL")->required();

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "Leave-one-out logistic fit score for every attribute");
  probe_cmd->fallthrough();
  probe_cmd->add_option("--norms", probe.norms, "Norm TSV")->required()->check(existing);
  probe_cmd->add_option("--min-freq", probe.min_freq, "Minimum production frequency")->capture_default_str();
  probe_cmd->add_option("--mode", probe.mode, "Feature source")
      ->check(CLI::IsMember({"static", "contextual"}))
      ->capture_default_str();
  probe_cmd->add_option("--static-vectors", probe.static_vectors, "Word vector text file")->check(existing);
  probe_cmd->add_option("--embed-cache", probe.embed_cache, "Sentence vector cache (JSONL, appended to)");
  probe_cmd->add_option("--embed-url", probe.embed_url, "Embedding service base URL (env ATTRPROBE_EMBED_URL)");
  probe_cmd->add_option("--embed-batch", probe.embed_batch, "Texts per service request")->capture_default_str();
  probe_cmd->add_option("--contextualizer-config", probe.contextualizer_config, "Contextualizer JSON")
      ->check(existing);
  probe_cmd->add_option("--exclusions", probe.exclusions, "Attribute exclusion list")->check(existing);
  probe_cmd->add_flag("--strict", probe.strict, "Drop objects with out-of-vocabulary tokens");
  probe_cmd->add_option("--kg", probe.kg, "Knowledge-base triple TSVs for augmentation")
      ->delimiter(',')
      ->check(existing);
  probe_cmd->add_option("--kg-seed", probe.kg_seed, "Seed for relation embeddings and sampling (default --seed)");
  probe_cmd->add_option("--kg-dim", probe.kg_dim, "Relation embedding width")->capture_default_str();
  probe_cmd->add_option("--kg-init-range", probe.kg_init_range, "Relation embeddings ~ uniform(-r, r)")
      ->capture_default_str();
  probe_cmd->add_flag("--kg-only", probe.kg_only, "Zero the base features");
  probe_cmd->add_option("--baseline", probe.baseline, "Fit CSV to compare against (writes delta.csv)")
      ->check(existing);
  probe_cmd->add_option("--label", probe.label, "Source name in the category table");
  probe_cmd->add_option("--l2", probe.l2, "Inverse regularization strength C")->capture_default_str();
  probe_cmd->add_option("--out", probe.out, "Output directory")->required();

  KgQueryArgs kgq;
  auto* kg_cmd = app.add_subcommand("kg-query", "Per-word knowledge-base relation matches for prompts");
  kg_cmd->fallthrough();
  kg_cmd->add_option("--prompt-file", kgq.prompt_file, "One prompt per line")->required()->check(existing);
  kg_cmd->add_option("--kb", kgq.kb, "Triple TSVs")->required()->delimiter(',')->check(existing);
  kg_cmd->add_option("--out", kgq.out, "Output JSONL")->required();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Corpus subset touching poorly fit attributes");
  sel_cmd->fallthrough();
  sel_cmd->add_option("--corpus", sel.corpus, "Corpus JSONL")->required()->check(existing);
  sel_cmd->add_option("--fit-report", sel.fit_report, "Fit CSV from probe")->required()->check(existing);
  sel_cmd->add_option("--threshold", sel.threshold, "Attributes with f1 below this are deficient")
      ->capture_default_str();
  sel_cmd->add_option("--stop-words", sel.stop_words, "Attribute words ignored for matching")->delimiter(',');
  sel_cmd->add_option("--out", sel.out, "Output JSONL")->required();

  CorrelateArgs cor;
  auto* cor_cmd = app.add_subcommand("correlate", "Regress per-attribute question accuracy on fit score");
  cor_cmd->fallthrough();
  cor_cmd->add_option("--links", cor.links, "Question-attribute links JSONL")->required()->check(existing);
  cor_cmd->add_option("--fit-report", cor.fit_report, "Fit CSV from probe")->required()->check(existing);
  cor_cmd->add_option("--n-boot", cor.n_boot, "Bootstrap resamples")->capture_default_str();
  cor_cmd->add_option("--ci", cor.ci, "Band coverage")->capture_default_str();
  cor_cmd->add_option("--grid", cor.grid, "Band grid points")->capture_default_str();
  cor_cmd->add_flag("--weighted", cor.weighted, "Weight attributes by question count");
  cor_cmd->add_option("--out", cor.out, "Output directory")->required();

  FusionArgs fus;
  auto* fus_cmd = app.add_subcommand("fusion-train", "Train the relation-sequence fusion head");
  fus_cmd->fallthrough();
  fus_cmd->add_option("--train", fus.train, "Training JSONL")->required()->check(existing);
  fus_cmd->add_option("--dev", fus.dev, "Dev JSONL")->required()->check(existing);
  fus_cmd->add_option("--relations", fus.relations, "Relation table rows (0 = infer)")->capture_default_str();
  fus_cmd->add_option("--relation-dim", fus.relation_dim, "Relation embedding width")->capture_default_str();
  fus_cmd->add_option("--hidden", fus.hidden, "LSTM hidden size per direction")->capture_default_str();
  fus_cmd->add_option("--epochs", fus.epochs)->capture_default_str();
  fus_cmd->add_option("--batch-size", fus.batch_size)->capture_default_str();
  fus_cmd->add_option("--lr", fus.lr, "Learning rate")->capture_default_str();
  fus_cmd->add_option("--out", fus.out, "Output directory")->required();

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Category table, swarm data and deltas from fit CSVs");
  rep_cmd->fallthrough();
  rep_cmd->add_option("--fit", rep.fits, "NAME=PATH, repeatable; two sources also give delta.csv")->required();
  rep_cmd->add_option("--small", rep.small, "Small-increase band limit")->capture_default_str();
  rep_cmd->add_option("--large", rep.large, "Large-increase band limit")->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (!argv_has(argc, argv, "--embed-url")) {
    if (const char* env = std::getenv("ATTRPROBE_EMBED_URL"); env && *env) probe.embed_url = env;
  }

  try {
    Run run;
    if (ctx_cmd->parsed()) {
      run = run_contextualize(ctx);
    } else if (probe_cmd->parsed()) {
      run = run_probe_command(probe, global);
    } else if (kg_cmd->parsed()) {
      run = run_kg_query(kgq, global);
    } else if (sel_cmd->parsed()) {
      run = run_select(sel, global);
    } else if (cor_cmd->parsed()) {
      run = run_correlate(cor, global);
    } else if (fus_cmd->parsed()) {
      run = run_fusion(fus, global);
    } else {
      run = run_report(rep);
    }
    commit(run, global);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "attrprobe: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "attrprobe: error: " << e.what() << '\n';
    return 1;
  }
}

// graphit: node classification on text-attributed graphs with prompt-optimized
// chat models. Subcommands wire the library modules together; all heavy
// lifting lives in graphit_core.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "graphit/config.hpp"
#include "graphit/eval.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using namespace graphit;

struct GlobalFlags {
  std::string config_path;
  std::string cache_dir;
  int parallelism = 0;
  uint64_t seed = 0;
  bool seed_set = false;
  bool dry_run = false;
  bool verbose = false;
};

// Flags collected by each subcommand, merged over file and env values.
struct FlagJson {
  json doc = json::object();

  void set(const std::string& dotted_path, json value) {
    json* node = &doc;
    size_t start = 0;
    while (true) {
      const size_t dot = dotted_path.find('.', start);
      if (dot == std::string::npos) {
        (*node)[dotted_path.substr(start)] = std::move(value);
        return;
      }
      node = &(*node)[dotted_path.substr(start, dot - start)];
      start = dot + 1;
    }
  }
};

RunConfig resolve_config(const GlobalFlags& globals, FlagJson flags) {
  if (!globals.cache_dir.empty()) flags.set("providers.cache_dir", globals.cache_dir);
  if (globals.parallelism > 0) flags.set("providers.parallelism", globals.parallelism);
  if (globals.seed_set) flags.set("sampling.seed", globals.seed);
  std::optional<fs::path> config_path;
  if (!globals.config_path.empty()) config_path = globals.config_path;
  return load_config(config_path, flags.doc, environment_overrides());
}

std::string api_key_from_env() {
  const auto env = environment_overrides();
  const auto it = env.find("GRAPHIT_API_KEY");
  return it == env.end() ? "" : it->second;
}

TextAttributedGraph load_graph_or_fail(const RunConfig& config) {
  if (config.nodes_path.empty() || config.edges_path.empty()) {
    throw UserError("no graph given: pass --graph DIR (or --nodes/--edges, or set it in --config)");
  }
  return TextAttributedGraph::load(config.nodes_path, config.edges_path);
}

const Clock& run_clock(const RunConfig& config) {
  static const SystemClock system_clock;
  static const FixedClock fixed_clock;
  return config.deterministic_artifacts ? static_cast<const Clock&>(fixed_clock)
                                        : static_cast<const Clock&>(system_clock);
}

bool print_plan_if_dry(const GlobalFlags& globals, const RunConfig& config,
                       const std::string& action) {
  if (!globals.dry_run) return false;
  ordered_json plan;
  plan["action"] = action;
  plan["config"] = config.snapshot();
  plan["provider_calls"] = 0;
  std::cout << plan.dump(2) << "\n";
  return true;
}

std::vector<EncodingSetting> parse_settings_list(const std::string& csv) {
  if (trim(csv) == "all") return all_settings();
  std::vector<EncodingSetting> settings;
  for (const std::string& part : split(csv, ',')) {
    const std::string name = trim(part);
    if (!name.empty()) settings.push_back(setting_from_string(name));
  }
  if (settings.empty()) throw UserError("no encoding settings given");
  return settings;
}

std::vector<NodeId> nodes_for_scope(const TextAttributedGraph& graph, const std::string& scope) {
  if (scope == "all") {
    std::vector<NodeId> ids;
    for (const auto& [id, record] : graph.nodes()) ids.push_back(id);
    return ids;
  }
  return graph.nodes_in_split(split_from_string(scope));
}

// --- subcommand bodies --------------------------------------------------------

int cmd_ingest(const GlobalFlags& globals, const FlagJson& flags, const std::string& out_dir) {
  const RunConfig config = resolve_config(globals, flags);
  const auto graph = load_graph_or_fail(config);
  std::cout << "nodes: " << graph.node_count() << "\n"
            << "edges: " << graph.edge_count() << "\n"
            << "labels: " << join(graph.label_names(), ", ") << "\n";
  for (const Split split : {Split::Train, Split::Val, Split::Test}) {
    std::cout << split_to_string(split) << ": " << graph.nodes_in_split(split).size() << "\n";
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    graph.save(fs::path(out_dir) / "nodes.jsonl", fs::path(out_dir) / "edges.txt");
    std::cout << "canonical copy written to " << out_dir << "\n";
  }
  return 0;
}

int cmd_keyphrases(const GlobalFlags& globals, const FlagJson& flags,
                   const std::string& text_file) {
  const RunConfig config = resolve_config(globals, flags);
  if (print_plan_if_dry(globals, config, "keyphrases")) return 0;

  std::ifstream file(text_file);
  if (!file) throw UserError("cannot open text file " + text_file);
  const std::string text((std::istreambuf_iterator<char>(file)),
                         std::istreambuf_iterator<char>());

  ProviderSet providers = make_providers(config, api_key_from_env());
  for (const std::string& phrase : extract_keyphrases(text, config.kpe, *providers.embedder)) {
    std::cout << phrase << "\n";
  }
  return 0;
}

int cmd_encode(const GlobalFlags& globals, const FlagJson& flags, const std::string& out_path,
               const std::string& scope) {
  const RunConfig config = resolve_config(globals, flags);
  if (print_plan_if_dry(globals, config, "encode")) return 0;

  const auto graph = load_graph_or_fail(config);
  const EncodingSetting setting = setting_from_string(config.setting);
  ProviderSet providers = make_providers(config, api_key_from_env());
  const EncodeOptions options = config.encode_options();

  const std::vector<NodeId> ids = nodes_for_scope(graph, scope);
  std::vector<NodeEncoding> encodings(ids.size());
  parallel_for(ids.size(), config.parallelism, [&](size_t i) {
    encodings[i] =
        encode_node(graph, ids[i], setting, options, providers.embedder, providers.chat);
  });

  std::ofstream out(out_path);
  if (!out) throw UserError("cannot write " + out_path);
  for (const NodeEncoding& encoding : encodings) {
    ordered_json obj;
    obj["id"] = encoding.node;
    obj["setting"] = std::string(setting_to_string(encoding.setting));
    obj["text"] = encoding.text;
    obj["token_count"] = encoding.token_count;
    out << obj.dump() << "\n";
  }
  std::cout << "wrote " << encodings.size() << " encodings to " << out_path << "\n";
  return 0;
}

ExperimentConfig experiment_config(const RunConfig& config, const TextAttributedGraph& graph,
                                   ProviderSet& providers,
                                   const std::vector<EncodingSetting>& settings) {
  ExperimentConfig experiment;
  experiment.graph = &graph;
  experiment.settings = settings;
  experiment.chat = providers.chat;
  experiment.proposer = providers.chat;
  experiment.summarizer = providers.chat;
  experiment.embedder = providers.embedder;
  experiment.task_noun = config.task_noun;
  experiment.strategy = strategy_from_string(config.optimizer.strategy);
  experiment.copro = config.optimizer.copro;
  experiment.bootstrap = config.optimizer.bootstrap;
  experiment.bootstrap.seed = config.sampling.seed;
  experiment.chat_params = config.chat_params;
  experiment.encode = config.encode_options();
  experiment.train_per_class = config.sampling.train_per_class;
  experiment.val_per_class = config.sampling.val_per_class;
  experiment.test_n = config.sampling.test_n;
  experiment.repeats = config.sampling.repeats;
  experiment.seed = config.sampling.seed;
  experiment.parallelism = config.parallelism;
  experiment.clock = &run_clock(config);
  experiment.config_snapshot = config.snapshot();
  return experiment;
}

int cmd_optimize(const GlobalFlags& globals, const FlagJson& flags, const std::string& out_path) {
  const RunConfig config = resolve_config(globals, flags);
  if (print_plan_if_dry(globals, config, "optimize")) return 0;

  const auto graph = load_graph_or_fail(config);
  ProviderSet providers = make_providers(config, api_key_from_env());
  const EncodingSetting setting = setting_from_string(config.setting);
  const EncodeOptions options = config.encode_options();
  const Clock& clock = run_clock(config);

  const auto train_ids = graph.sample_per_class(Split::Train, config.sampling.train_per_class,
                                                derive_seed(config.sampling.seed, "train"));
  const auto val_ids = graph.sample_per_class(Split::Val, config.sampling.val_per_class,
                                              derive_seed(config.sampling.seed, "val"));

  const auto to_examples = [&](const std::vector<NodeId>& ids) {
    std::vector<Example> examples(ids.size());
    parallel_for(ids.size(), config.parallelism, [&](size_t i) {
      const NodeEncoding encoding =
          encode_node(graph, ids[i], setting, options, providers.embedder, providers.chat);
      const NodeRecord& record = graph.node(ids[i]);
      if (!record.label) throw UserError("node \"" + ids[i] + "\" has no label");
      examples[i] = {encoding.text, graph.label_names(), graph.label_name(*record.label)};
    });
    return examples;
  };
  const std::vector<Example> trainset = to_examples(train_ids);
  const std::vector<Example> valset = to_examples(val_ids);

  ClassifierProgram program;
  program.signature = default_signature(config.task_noun);
  program.chat_params = config.chat_params;

  BootstrapConfig bootstrap = config.optimizer.bootstrap;
  bootstrap.seed = config.sampling.seed;
  ChatProviders chats{providers.chat, providers.chat};
  const OptimizeResult result =
      compile(program, chats, trainset, valset, exact_match_metric(),
              strategy_from_string(config.optimizer.strategy), config.optimizer.copro, bootstrap,
              clock, config.parallelism);

  save_program(result.program, out_path, clock);
  const fs::path trace_path = fs::path(out_path).parent_path() / "trace.jsonl";
  result.trace.save_jsonl(trace_path);
  std::cout << "best validation score: " << result.best_score << "\n"
            << "program written to " << out_path << "\n"
            << "trace written to " << trace_path.string() << "\n";
  return 0;
}

int cmd_classify(const GlobalFlags& globals, const FlagJson& flags,
                 const std::string& program_path, const std::string& encodings_path,
                 const std::string& out_path) {
  const RunConfig config = resolve_config(globals, flags);
  if (print_plan_if_dry(globals, config, "classify")) return 0;

  const auto graph = load_graph_or_fail(config);
  const ClassifierProgram program = load_program(program_path);
  ProviderSet providers = make_providers(config, api_key_from_env());
  const std::vector<std::string>& options = graph.label_names();
  if (options.empty()) throw UserError("graph has no label names to use as options");

  std::ifstream in(encodings_path);
  if (!in) throw UserError("cannot open encodings file " + encodings_path);
  std::vector<NodeId> ids;
  std::vector<std::string> features;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json record = json::parse(line);
      ids.push_back(record.at("id").get<std::string>());
      features.push_back(record.at("text").get<std::string>());
    } catch (const json::exception& e) {
      throw UserError(encodings_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  std::vector<Prediction> predictions(ids.size());
  std::atomic<int> failures{0};
  parallel_for(ids.size(), config.parallelism, [&](size_t i) {
    try {
      predictions[i] = classify(program, *providers.chat, features[i], options);
    } catch (const std::exception& e) {
      logging::warn("node \"" + ids[i] + "\": " + e.what());
      predictions[i].status = ParseStatus::NoMatch;
      failures.fetch_add(1);
    }
  });

  std::ostream* out = &std::cout;
  std::ofstream out_file;
  if (!out_path.empty()) {
    out_file.open(out_path);
    if (!out_file) throw UserError("cannot write " + out_path);
    out = &out_file;
  }
  for (size_t i = 0; i < ids.size(); ++i) {
    ordered_json obj;
    obj["id"] = ids[i];
    obj["labels"] = predictions[i].labels;
    obj["reasoning"] = predictions[i].reasoning;
    obj["valid"] = predictions[i].valid();
    *out << obj.dump() << "\n";
  }
  if (failures.load() > 0) {
    std::cerr << failures.load() << " nodes failed; their records are marked invalid\n";
  }
  return 0;
}

int cmd_eval(const GlobalFlags& globals, const FlagJson& flags, const std::string& program_path,
             const std::string& settings_csv, const std::string& report_dir) {
  const RunConfig config = resolve_config(globals, flags);
  if (print_plan_if_dry(globals, config, "eval")) return 0;

  const auto graph = load_graph_or_fail(config);
  ProviderSet providers = make_providers(config, api_key_from_env());

  if (program_path.empty()) {
    // full protocol: compile per setting, then score sampled test sets
    const std::vector<EncodingSetting> settings =
        settings_csv.empty() ? parse_settings_list(config.setting)
                             : parse_settings_list(settings_csv);
    ExperimentConfig experiment = experiment_config(config, graph, providers, settings);
    if (!report_dir.empty()) experiment.out_dir = report_dir;
    const ExperimentReport report = run_experiment(experiment);
    std::cout << report.to_table();
    if (!report_dir.empty()) std::cout << "report written to " << report_dir << "\n";
    return 0;
  }

  // evaluate an existing program artifact under the configured setting
  const ClassifierProgram program = load_program(program_path);
  const EncodingSetting setting = setting_from_string(config.setting);
  const EncodeOptions options = config.encode_options();

  std::vector<double> per_repeat;
  int failures = 0;
  double token_sum = 0.0;
  size_t token_n = 0;
  for (int repeat = 0; repeat < config.sampling.repeats; ++repeat) {
    const uint64_t test_seed = derive_seed(derive_seed(config.sampling.seed, "test"),
                                           static_cast<uint64_t>(repeat));
    const auto test_ids = graph.sample_test(config.sampling.test_n, test_seed);
    std::vector<NodeEncoding> encodings(test_ids.size());
    parallel_for(test_ids.size(), config.parallelism, [&](size_t i) {
      encodings[i] =
          encode_node(graph, test_ids[i], setting, options, providers.embedder, providers.chat);
    });
    for (const NodeEncoding& encoding : encodings) {
      token_sum += encoding.token_count;
      ++token_n;
    }

    std::vector<Prediction> predictions(test_ids.size());
    std::atomic<int> repeat_failures{0};
    parallel_for(test_ids.size(), config.parallelism, [&](size_t i) {
      try {
        predictions[i] =
            classify(program, *providers.chat, encodings[i].text, graph.label_names());
      } catch (const std::exception&) {
        predictions[i].status = ParseStatus::NoMatch;
        repeat_failures.fetch_add(1);
      }
    });
    failures += repeat_failures.load();

    std::vector<PredictionRecord> records;
    for (size_t i = 0; i < test_ids.size(); ++i) {
      const NodeRecord& node = graph.node(test_ids[i]);
      if (!node.label) throw UserError("test node \"" + test_ids[i] + "\" has no gold label");
      PredictionRecord record;
      record.node = test_ids[i];
      record.ranked_labels = predictions[i].labels;
      record.gold_labels = {graph.label_name(*node.label)};
      record.valid = predictions[i].valid();
      records.push_back(std::move(record));
    }
    per_repeat.push_back(rp_at_k(records, 1));
  }

  double mean = 0.0;
  for (double score : per_repeat) mean += score;
  mean /= static_cast<double>(per_repeat.size());

  ordered_json report;
  report["schema_version"] = 1;
  report["config"] = config.snapshot();
  report["program"] = program_path;
  report["setting"] = config.setting;
  report["per_repeat"] = per_repeat;
  report["accuracy"] = mean;
  report["mean_tokens"] = token_n == 0 ? 0.0 : token_sum / static_cast<double>(token_n);
  report["failures"] = failures;
  std::cout << report.dump(2) << "\n";
  if (!report_dir.empty()) {
    fs::create_directories(report_dir);
    std::ofstream out(fs::path(report_dir) / "report.json");
    out << report.dump(2) << "\n";
  }
  return 0;
}

int cmd_token_stats(const GlobalFlags& globals, const FlagJson& flags, const std::string& scope,
                    const std::string& out_path) {
  const RunConfig config = resolve_config(globals, flags);
  if (print_plan_if_dry(globals, config, "token-stats")) return 0;

  const auto graph = load_graph_or_fail(config);
  ProviderSet providers = make_providers(config, api_key_from_env());
  const EncodeOptions options = config.encode_options();

  const TokenRatioReport report = token_ratio_report(graph, nodes_for_scope(graph, scope),
                                                     options, *providers.embedder,
                                                     *providers.chat);
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["nodes"] = report.ratios.size();
  doc["skipped"] = report.skipped;
  doc["mean_ratio"] = report.mean;
  doc["median_ratio"] = report.median;
  doc["histogram_bins_0_to_10_step_0.5_plus_overflow"] = report.histogram;
  std::cout << doc.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw UserError("cannot write " + out_path);
    out << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_cache(const GlobalFlags& globals, const FlagJson& flags, bool clear) {
  const RunConfig config = resolve_config(globals, flags);
  if (config.cache_dir.empty()) {
    throw UserError("no cache directory configured (--cache-dir or GRAPHIT_CACHE_DIR)");
  }
  ResponseCache cache(config.cache_dir);
  if (clear) {
    std::cout << "removed " << cache.clear() << " entries from " << config.cache_dir << "\n";
  } else {
    std::cout << "entries: " << cache.entry_count() << "\n"
              << "bytes: " << cache.total_bytes() << "\n"
              << "dir: " << config.cache_dir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace graphit;

  CLI::App app{"node classification on text-attributed graphs with prompt-optimized chat models"};
  app.require_subcommand(1);

  GlobalFlags globals;
  app.add_option("--config", globals.config_path, "JSON config file");
  app.add_option("--cache-dir", globals.cache_dir, "response cache directory");
  app.add_option("--parallelism", globals.parallelism, "max concurrent provider calls");
  app.add_option("--seed", globals.seed, "sampling seed")->each([&](const std::string&) {
    globals.seed_set = true;
  });
  app.add_flag("--dry-run", globals.dry_run, "print the resolved plan; no provider calls");
  app.add_flag("--verbose", globals.verbose, "verbose logging");

  // every subcommand collects overrides into a FlagJson
  FlagJson flags;
  const auto add_graph_options = [&flags](CLI::App* cmd, bool required) {
    auto* dir = cmd->add_option_function<std::string>(
        "--graph", [&flags](const std::string& v) { flags.set("graph.dir", v); },
        "graph directory (nodes.jsonl + edges.txt)");
    auto* nodes = cmd->add_option_function<std::string>(
        "--nodes", [&flags](const std::string& v) { flags.set("graph.nodes", v); },
        "nodes file (line-delimited JSON)");
    cmd->add_option_function<std::string>(
        "--edges", [&flags](const std::string& v) { flags.set("graph.edges", v); },
        "edges file (src,dst per line)");
    if (required) {
      // one of --graph or --nodes/--edges must be present
      dir->excludes(nodes);
      cmd->callback([]() {});
    }
  };
  const auto add_setting_option = [&flags](CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--setting", [&flags](const std::string& v) { flags.set("setting", v); },
        "encoding setting: text|text+labels|text+labels+summary|text+labels+keyphrases");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a graph and write its canonical form");
  add_graph_options(ingest, true);
  std::string ingest_out;
  ingest->add_option("--out", ingest_out, "directory for the canonical copy");

  // keyphrases
  auto* keyphrases = app.add_subcommand("keyphrases", "extract keyphrases from a text file");
  std::string kp_text_file;
  keyphrases->add_option("--text-file", kp_text_file, "input text file")->required();
  keyphrases->add_option_function<std::string>(
      "--ngrams",
      [&flags](const std::string& v) {
        std::vector<int> lengths;
        for (const std::string& part : split(v, ',')) lengths.push_back(std::stoi(trim(part)));
        flags.set("kpe.ngrams", lengths);
      },
      "comma-separated n-gram lengths, e.g. 1,2,3");
  keyphrases->add_option_function<int>(
      "--zeta", [&flags](int v) { flags.set("kpe.zeta", v); }, "number of phrases to return");
  keyphrases->add_option_function<std::string>(
      "--method", [&flags](const std::string& v) { flags.set("kpe.method", v); },
      "diversity method: mmr|max_sum");
  keyphrases->add_option_function<double>(
      "--lambda", [&flags](double v) { flags.set("kpe.lambda", v); },
      "mmr relevance/diversity trade-off in [0,1]");
  keyphrases->add_option_function<std::string>(
      "--embedder", [&flags](const std::string& v) { flags.set("providers.embed.type", v); },
      "embedding provider: hashbag|openai");

  // encode
  auto* encode = app.add_subcommand("encode", "write node encodings as JSONL");
  add_graph_options(encode, true);
  add_setting_option(encode);
  std::string encode_out = "encodings.jsonl";
  std::string encode_scope = "all";
  encode->add_option("--out", encode_out, "output JSONL path");
  encode->add_option("--split", encode_scope, "train|val|test|all");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "compile an optimized classifier program");
  add_graph_options(optimize, true);
  add_setting_option(optimize);
  std::string optimize_out = "program.json";
  optimize->add_option("--out", optimize_out, "program artifact path");
  optimize->add_option_function<std::string>(
      "--strategy", [&flags](const std::string& v) { flags.set("optimizer.strategy", v); },
      "copro_then_fewshot|fewshot_only|copro_only");
  optimize->add_option_function<int>(
      "--train-per-class", [&flags](int v) { flags.set("sampling.train_per_class", v); },
      "train nodes sampled per class");
  optimize->add_option_function<int>(
      "--val-per-class", [&flags](int v) { flags.set("sampling.val_per_class", v); },
      "validation nodes sampled per class");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "classify encoded nodes with a program");
  add_graph_options(classify_cmd, true);
  std::string classify_program, classify_encodings, classify_out;
  classify_cmd->add_option("--program", classify_program, "program artifact JSON")->required();
  classify_cmd->add_option("--encodings", classify_encodings, "encodings JSONL")->required();
  classify_cmd->add_flag("--options-from-graph",
                         "use the graph's label names as options (default behavior)");
  classify_cmd->add_option("--out", classify_out, "predictions JSONL (default stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a program or run the full protocol");
  add_graph_options(eval_cmd, true);
  add_setting_option(eval_cmd);
  std::string eval_program, eval_settings, eval_report;
  eval_cmd->add_option("--program", eval_program, "existing program artifact to score");
  eval_cmd->add_option("--settings", eval_settings,
                       "comma-separated settings for the full protocol");
  eval_cmd->add_option("--report", eval_report, "report output directory");
  eval_cmd->add_option_function<int>(
      "--test-n", [&flags](int v) { flags.set("sampling.test_n", v); },
      "test nodes sampled per repeat");
  eval_cmd->add_option_function<int>(
      "--repeats", [&flags](int v) { flags.set("sampling.repeats", v); },
      "number of sampled test sets");
  eval_cmd->add_option_function<std::string>(
      "--strategy", [&flags](const std::string& v) { flags.set("optimizer.strategy", v); },
      "optimizer strategy for the full protocol");

  // token-stats
  auto* token_stats = app.add_subcommand("token-stats",
                                         "summary/keyphrase token-ratio histogram");
  add_graph_options(token_stats, true);
  std::string stats_scope = "all";
  std::string stats_out;
  token_stats->add_option("--split", stats_scope, "train|val|test|all");
  token_stats->add_option("--out", stats_out, "report JSON path");

  // cache
  auto* cache_cmd = app.add_subcommand("cache", "inspect or clear the response cache");
  auto* cache_stats = cache_cmd->add_subcommand("stats", "entry count and size");
  auto* cache_clear = cache_cmd->add_subcommand("clear", "remove every entry");
  cache_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  }

  logging::set_level(globals.verbose ? logging::Level::Verbose : logging::Level::Normal);

  try {
    if (*ingest) return cmd_ingest(globals, flags, ingest_out);
    if (*keyphrases) return cmd_keyphrases(globals, flags, kp_text_file);
    if (*encode) return cmd_encode(globals, flags, encode_out, encode_scope);
    if (*optimize) return cmd_optimize(globals, flags, optimize_out);
    if (*classify_cmd) {
      return cmd_classify(globals, flags, classify_program, classify_encodings, classify_out);
    }
    if (*eval_cmd) return cmd_eval(globals, flags, eval_program, eval_settings, eval_report);
    if (*token_stats) return cmd_token_stats(globals, flags, stats_scope, stats_out);
    if (*cache_cmd) return cmd_cache(globals, flags, cache_clear->parsed());
    (void)cache_stats;
    std::cerr << "no subcommand given; run with --help\n";
    return 1;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}

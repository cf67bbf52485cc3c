#include "graphit/config.hpp"

#include <cstdlib>
#include <fstream>

namespace graphit {

using nlohmann::json;
using nlohmann::ordered_json;

EncodeOptions RunConfig::encode_options() const {
  EncodeOptions options;
  options.label_policy = parsed_label_policy();
  options.text_budget_tokens = text_budget_tokens;
  options.token_mode = tokenizer_from_string(tokenizer);
  options.kpe = kpe;
  options.summary_max_tokens = summary_max_tokens;
  return options;
}

LabelPolicy RunConfig::parsed_label_policy() const {
  if (label_policy == "non_test_only") return LabelPolicy::NonTestOnly;
  if (label_policy == "all") return LabelPolicy::All;
  throw UserError("unknown label policy \"" + label_policy + "\" (expected non_test_only|all)");
}

namespace {

// Structural schema used for unknown-key rejection: every known path listed.
const json& config_schema() {
  static const json schema = {
      {"graph", {{"nodes", true}, {"edges", true}, {"dir", true}}},
      {"setting", true},
      {"task_noun", true},
      {"kpe",
       {{"ngrams", true},
        {"zeta", true},
        {"method", true},
        {"lambda", true},
        {"max_sum_pool", true},
        {"min_phrase_chars", true},
        {"stopwords_file", true}}},
      {"providers",
       {{"chat",
         {{"type", true},
          {"model", true},
          {"base_url", true},
          {"script", true},
          {"mode", true},
          {"default_response", true}}},
        {"embed",
         {{"type", true}, {"model", true}, {"base_url", true}, {"dimension", true}}},
        {"cache_dir", true},
        {"parallelism", true}}},
      {"optimizer",
       {{"strategy", true},
        {"breadth", true},
        {"depth", true},
        {"proposer_temperature", true},
        {"max_bootstrapped_demos", true},
        {"max_labeled_demos", true},
        {"num_candidate_programs", true}}},
      {"sampling",
       {{"train_per_class", true},
        {"val_per_class", true},
        {"test_n", true},
        {"repeats", true},
        {"seed", true}}},
      {"chat_params", {{"temperature", true}, {"max_tokens", true}}},
      {"encoding",
       {{"label_policy", true},
        {"text_budget", true},
        {"tokenizer", true},
        {"summary_max_tokens", true}}},
      {"out_dir", true},
      {"deterministic_artifacts", true},
  };
  return schema;
}

void reject_unknown_keys(const json& doc, const json& schema, const std::string& prefix) {
  if (!doc.is_object()) return;
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.is_object() || !schema.contains(key)) {
      throw UserError("unknown config key \"" + path + "\"");
    }
    if (schema[key].is_object()) {
      if (!value.is_object()) {
        throw UserError("config key \"" + path + "\" must be an object");
      }
      reject_unknown_keys(value, schema[key], path);
    }
  }
}

template <typename T>
void assign(const json& doc, const char* key, T& target, const std::string& prefix) {
  if (!doc.contains(key)) return;
  try {
    target = doc[key].get<T>();
  } catch (const json::exception&) {
    throw UserError("config key \"" + prefix + key + "\" has the wrong type");
  }
}

void apply_json(RunConfig& config, const json& doc) {
  reject_unknown_keys(doc, config_schema(), "");

  if (doc.contains("graph")) {
    const json& graph = doc["graph"];
    std::string nodes, edges, dir;
    assign(graph, "nodes", nodes, "graph.");
    assign(graph, "edges", edges, "graph.");
    assign(graph, "dir", dir, "graph.");
    if (!dir.empty()) {
      config.nodes_path = std::filesystem::path(dir) / "nodes.jsonl";
      config.edges_path = std::filesystem::path(dir) / "edges.txt";
    }
    if (!nodes.empty()) config.nodes_path = nodes;
    if (!edges.empty()) config.edges_path = edges;
  }
  assign(doc, "setting", config.setting, "");
  assign(doc, "task_noun", config.task_noun, "");

  if (doc.contains("kpe")) {
    const json& kpe = doc["kpe"];
    assign(kpe, "ngrams", config.kpe.ngram_lengths, "kpe.");
    assign(kpe, "zeta", config.kpe.zeta, "kpe.");
    if (kpe.contains("method")) {
      config.kpe.method = diversity_from_string(kpe["method"].get<std::string>());
    }
    assign(kpe, "lambda", config.kpe.lambda_div, "kpe.");
    assign(kpe, "max_sum_pool", config.kpe.max_sum_pool, "kpe.");
    assign(kpe, "min_phrase_chars", config.kpe.min_phrase_chars, "kpe.");
    if (kpe.contains("stopwords_file")) {
      const std::string path = kpe["stopwords_file"].get<std::string>();
      std::ifstream file(path);
      if (!file) throw UserError("cannot open stopwords file " + path);
      config.kpe.stopwords.clear();
      std::string word;
      while (std::getline(file, word)) {
        const std::string cleaned = trim(word);
        if (!cleaned.empty()) config.kpe.stopwords.insert(to_lower(cleaned));
      }
      config.kpe.use_default_stopwords = false;
    }
  }

  if (doc.contains("providers")) {
    const json& providers = doc["providers"];
    if (providers.contains("chat")) {
      const json& chat = providers["chat"];
      assign(chat, "type", config.chat.type, "providers.chat.");
      assign(chat, "model", config.chat.model, "providers.chat.");
      assign(chat, "base_url", config.chat.base_url, "providers.chat.");
      assign(chat, "script", config.chat.script, "providers.chat.");
      assign(chat, "mode", config.chat.mode, "providers.chat.");
      assign(chat, "default_response", config.chat.default_response, "providers.chat.");
    }
    if (providers.contains("embed")) {
      const json& embed = providers["embed"];
      assign(embed, "type", config.embed.type, "providers.embed.");
      assign(embed, "model", config.embed.model, "providers.embed.");
      assign(embed, "base_url", config.embed.base_url, "providers.embed.");
      assign(embed, "dimension", config.embed.dimension, "providers.embed.");
    }
    assign(providers, "cache_dir", config.cache_dir, "providers.");
    assign(providers, "parallelism", config.parallelism, "providers.");
  }

  if (doc.contains("optimizer")) {
    const json& optimizer = doc["optimizer"];
    assign(optimizer, "strategy", config.optimizer.strategy, "optimizer.");
    assign(optimizer, "breadth", config.optimizer.copro.breadth, "optimizer.");
    assign(optimizer, "depth", config.optimizer.copro.depth, "optimizer.");
    assign(optimizer, "proposer_temperature", config.optimizer.copro.proposer_temperature,
           "optimizer.");
    assign(optimizer, "max_bootstrapped_demos", config.optimizer.bootstrap.max_bootstrapped_demos,
           "optimizer.");
    assign(optimizer, "max_labeled_demos", config.optimizer.bootstrap.max_labeled_demos,
           "optimizer.");
    assign(optimizer, "num_candidate_programs",
           config.optimizer.bootstrap.num_candidate_programs, "optimizer.");
  }

  if (doc.contains("sampling")) {
    const json& sampling = doc["sampling"];
    assign(sampling, "train_per_class", config.sampling.train_per_class, "sampling.");
    assign(sampling, "val_per_class", config.sampling.val_per_class, "sampling.");
    assign(sampling, "test_n", config.sampling.test_n, "sampling.");
    assign(sampling, "repeats", config.sampling.repeats, "sampling.");
    assign(sampling, "seed", config.sampling.seed, "sampling.");
  }

  if (doc.contains("chat_params")) {
    const json& params = doc["chat_params"];
    assign(params, "temperature", config.chat_params.temperature, "chat_params.");
    assign(params, "max_tokens", config.chat_params.max_tokens, "chat_params.");
  }

  if (doc.contains("encoding")) {
    const json& encoding = doc["encoding"];
    assign(encoding, "label_policy", config.label_policy, "encoding.");
    assign(encoding, "text_budget", config.text_budget_tokens, "encoding.");
    assign(encoding, "tokenizer", config.tokenizer, "encoding.");
    assign(encoding, "summary_max_tokens", config.summary_max_tokens, "encoding.");
  }

  assign(doc, "out_dir", config.out_dir, "");
  assign(doc, "deterministic_artifacts", config.deterministic_artifacts, "");
}

}  // namespace

std::map<std::string, std::string> environment_overrides() {
  std::map<std::string, std::string> env;
  for (const char* name : {"GRAPHIT_API_KEY", "GRAPHIT_BASE_URL", "GRAPHIT_CHAT_MODEL",
                           "GRAPHIT_EMBED_MODEL", "GRAPHIT_CACHE_DIR"}) {
    const char* value = std::getenv(name);
    if (value != nullptr && *value != '\0') env[name] = value;
  }
  return env;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const json& flag_overrides, const std::map<std::string, std::string>& env) {
  RunConfig config;

  if (path) {
    std::ifstream file(*path);
    if (!file) throw UserError("cannot open config file " + path->string());
    json doc;
    try {
      doc = json::parse(file, nullptr, true, true);  // comments allowed
    } catch (const json::exception& e) {
      throw UserError("config file " + path->string() + ": " + e.what());
    }
    if (!doc.is_object()) throw UserError("config file must contain a JSON object");
    apply_json(config, doc);
  }

  // file values < env vars < CLI flags
  if (const auto it = env.find("GRAPHIT_BASE_URL"); it != env.end()) {
    config.chat.base_url = it->second;
    config.embed.base_url = it->second;
  }
  if (const auto it = env.find("GRAPHIT_CHAT_MODEL"); it != env.end()) {
    config.chat.model = it->second;
  }
  if (const auto it = env.find("GRAPHIT_EMBED_MODEL"); it != env.end()) {
    config.embed.model = it->second;
  }
  if (const auto it = env.find("GRAPHIT_CACHE_DIR"); it != env.end()) {
    config.cache_dir = it->second;
  }

  if (!flag_overrides.is_null() && !flag_overrides.empty()) apply_json(config, flag_overrides);

  // validation before any provider call
  if (config.chat.type != "openai" && config.chat.type != "scripted") {
    throw UserError("unknown chat provider type \"" + config.chat.type + "\"");
  }
  if (config.embed.type != "openai" && config.embed.type != "hashbag") {
    throw UserError("unknown embedding provider type \"" + config.embed.type + "\"");
  }
  if (config.chat.type == "scripted" && config.chat.script.empty()) {
    throw UserError("scripted chat provider needs providers.chat.script");
  }
  if (config.kpe.zeta < 1) throw UserError("kpe.zeta must be >= 1");
  if (config.kpe.max_sum_pool != 0 && config.kpe.max_sum_pool < config.kpe.zeta) {
    throw UserError("kpe.max_sum_pool must be >= kpe.zeta");
  }
  if (config.kpe.lambda_div < 0.0 || config.kpe.lambda_div > 1.0) {
    throw UserError("kpe.lambda must be in [0, 1]");
  }
  if (config.parallelism < 1) throw UserError("parallelism must be >= 1");
  strategy_from_string(config.optimizer.strategy);
  setting_from_string(config.setting);
  tokenizer_from_string(config.tokenizer);
  config.parsed_label_policy();

  return config;
}

ordered_json RunConfig::snapshot() const {
  ordered_json doc;
  doc["graph"] = {{"nodes", nodes_path.string()}, {"edges", edges_path.string()}};
  doc["setting"] = setting;
  doc["task_noun"] = task_noun;
  doc["kpe"] = {{"ngrams", kpe.ngram_lengths},
                {"zeta", kpe.zeta},
                {"method", std::string(diversity_to_string(kpe.method))},
                {"lambda", kpe.lambda_div},
                {"max_sum_pool", kpe.effective_pool()},
                {"min_phrase_chars", kpe.min_phrase_chars}};
  doc["providers"] = {{"chat",
                       {{"type", chat.type},
                        {"model", chat.model},
                        {"base_url", chat.base_url},
                        {"script", chat.script},
                        {"mode", chat.mode}}},
                      {"embed",
                       {{"type", embed.type},
                        {"model", embed.model},
                        {"dimension", embed.dimension}}},
                      {"cache_dir", cache_dir},
                      {"parallelism", parallelism}};
  doc["optimizer"] = {{"strategy", optimizer.strategy},
                      {"breadth", optimizer.copro.breadth},
                      {"depth", optimizer.copro.depth},
                      {"proposer_temperature", optimizer.copro.proposer_temperature},
                      {"max_bootstrapped_demos", optimizer.bootstrap.max_bootstrapped_demos},
                      {"max_labeled_demos", optimizer.bootstrap.max_labeled_demos},
                      {"num_candidate_programs", optimizer.bootstrap.num_candidate_programs}};
  doc["sampling"] = {{"train_per_class", sampling.train_per_class},
                     {"val_per_class", sampling.val_per_class},
                     {"test_n", sampling.test_n},
                     {"repeats", sampling.repeats},
                     {"seed", sampling.seed}};
  doc["chat_params"] = {{"temperature", chat_params.temperature},
                        {"max_tokens", chat_params.max_tokens}};
  doc["encoding"] = {{"label_policy", label_policy},
                     {"text_budget", text_budget_tokens},
                     {"tokenizer", tokenizer},
                     {"summary_max_tokens", summary_max_tokens}};
  doc["out_dir"] = out_dir;
  doc["deterministic_artifacts"] = deterministic_artifacts;
  return doc;
}

ProviderSet make_providers(const RunConfig& config, const std::string& api_key) {
  ProviderSet providers;

  if (config.chat.type == "scripted") {
    providers.owned_chat =
        std::make_unique<ScriptedChat>(ScriptedChat::from_file(config.chat.script));
  } else {
    OpenAiConfig openai;
    openai.base_url = config.chat.base_url;
    openai.api_key = api_key;
    openai.model = config.chat.model;
    providers.owned_chat = std::make_unique<OpenAiChat>(openai);
  }
  providers.chat = providers.owned_chat.get();

  if (config.embed.type == "hashbag") {
    providers.owned_embedder = std::make_unique<HashBagEmbedder>(config.embed.dimension);
  } else {
    OpenAiConfig openai;
    openai.base_url = config.embed.base_url;
    openai.api_key = api_key;
    openai.model = config.embed.model;
    providers.owned_embedder = std::make_unique<OpenAiEmbedder>(openai);
  }
  providers.embedder = providers.owned_embedder.get();

  if (!config.cache_dir.empty()) {
    providers.cache = std::make_unique<ResponseCache>(config.cache_dir);
    providers.cached_chat =
        std::make_unique<CachingChat>(*providers.owned_chat, *providers.cache);
    providers.chat = providers.cached_chat.get();
    providers.cached_embedder =
        std::make_unique<CachingEmbedder>(*providers.owned_embedder, *providers.cache);
    providers.embedder = providers.cached_embedder.get();
  }
  return providers;
}

}  // namespace graphit

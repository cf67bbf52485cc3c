#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "graphit/encoding.hpp"
#include "graphit/optimizer.hpp"
#include "graphit/providers.hpp"

namespace graphit {

struct ChatProviderConfig {
  std::string type = "openai";  // openai | scripted
  std::string model;
  std::string base_url = "https://api.openai.com/v1";
  std::string script;           // scripted: path to the script file
  std::string mode = "strict";  // scripted: strict | lenient
  std::string default_response;
};

struct EmbedProviderConfig {
  std::string type = "hashbag";  // openai | hashbag
  std::string model;
  std::string base_url = "https://api.openai.com/v1";
  int dimension = 256;
};

struct SamplingConfig {
  int train_per_class = 3;
  int val_per_class = 2;
  int test_n = 200;
  int repeats = 2;
  uint64_t seed = 0;
};

struct OptimizerConfig {
  std::string strategy = "copro_then_fewshot";
  CoproConfig copro;
  BootstrapConfig bootstrap;
};

// Everything a run needs. Validated before any provider call; unknown config
// keys are rejected by name.
struct RunConfig {
  std::filesystem::path nodes_path;
  std::filesystem::path edges_path;
  std::string setting = "text+labels+keyphrases";
  std::string task_noun = "scientific paper";

  KpeConfig kpe;
  ChatProviderConfig chat;
  EmbedProviderConfig embed;
  OptimizerConfig optimizer;
  SamplingConfig sampling;
  ChatParams chat_params;

  std::string label_policy = "non_test_only";
  int text_budget_tokens = 512;
  std::string tokenizer = "whitespace";
  int summary_max_tokens = 128;

  std::string cache_dir;
  int parallelism = 4;
  std::string out_dir = "out";
  bool deterministic_artifacts = true;  // fixed timestamps in artifacts

  EncodeOptions encode_options() const;
  LabelPolicy parsed_label_policy() const;

  // Resolved snapshot for reports; never includes credentials.
  nlohmann::ordered_json snapshot() const;
};

// Ascending precedence: config file < environment < flag overrides.
// `flags` uses the same key paths as the file, e.g. {"sampling": {"seed": 7}}.
// Environment: GRAPHIT_API_KEY, GRAPHIT_BASE_URL, GRAPHIT_CHAT_MODEL,
// GRAPHIT_EMBED_MODEL, GRAPHIT_CACHE_DIR.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const nlohmann::json& flag_overrides,
                      const std::map<std::string, std::string>& env);

std::map<std::string, std::string> environment_overrides();

// Builds providers from config. The returned holder owns whichever concrete
// providers were configured, wrapped in the cache when cache_dir is set.
struct ProviderSet {
  ChatProvider* chat = nullptr;
  EmbeddingProvider* embedder = nullptr;

  std::unique_ptr<ChatProvider> owned_chat;
  std::unique_ptr<ChatProvider> cached_chat;
  std::unique_ptr<EmbeddingProvider> owned_embedder;
  std::unique_ptr<EmbeddingProvider> cached_embedder;
  std::unique_ptr<ResponseCache> cache;
};

ProviderSet make_providers(const RunConfig& config, const std::string& api_key);

}  // namespace graphit

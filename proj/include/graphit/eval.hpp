#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphit/encoding.hpp"
#include "graphit/graph.hpp"
#include "graphit/optimizer.hpp"

namespace graphit {

struct PredictionRecord {
  NodeId node;
  std::vector<std::string> ranked_labels;  // no duplicates
  std::set<std::string> gold_labels;
  bool valid = true;
};

// Rank-precision at top K:
//   (1/N) sum_n [ 1/min(K, |gold_n|) * sum_{k=1..K} Rel(n, k) ]
// Rel(n,k) = 1 iff the k-th ranked label is in gold. Invalid records
// contribute 0. Errors on empty input or a record with empty gold.
double rp_at_k(const std::vector<PredictionRecord>& records, int K);

struct SettingResult {
  EncodingSetting setting = EncodingSetting::TextOnly;
  std::vector<double> per_repeat;  // RP@1 per sampled test set
  double accuracy = 0.0;           // mean over repeats
  double mean_tokens = 0.0;        // mean encoding token count over test nodes
  int failures = 0;                // provider-level failures during classification
  int invalid_predictions = 0;     // parsed but unmatched completions
  std::string instruction;
  int num_demos = 0;
};

struct ExperimentReport {
  std::vector<SettingResult> settings;
  std::vector<std::string> warnings;
  nlohmann::ordered_json config_snapshot;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

struct ExperimentConfig {
  const TextAttributedGraph* graph = nullptr;
  std::vector<EncodingSetting> settings;

  ChatProvider* chat = nullptr;      // task model
  ChatProvider* proposer = nullptr;  // instruction proposer; nullptr -> task model
  ChatProvider* summarizer = nullptr;  // summary encodings; nullptr -> task model
  EmbeddingProvider* embedder = nullptr;

  std::string task_noun = "scientific paper";
  Strategy strategy = Strategy::CoproThenFewshot;
  CoproConfig copro;
  BootstrapConfig bootstrap;
  ChatParams chat_params;
  EncodeOptions encode;

  int train_per_class = 3;
  int val_per_class = 2;
  int test_n = 200;
  int repeats = 2;
  uint64_t seed = 0;
  int parallelism = 4;

  const Clock* clock = nullptr;  // nullptr -> deterministic fixed clock
  std::filesystem::path out_dir;  // empty -> no artifacts persisted
  nlohmann::ordered_json config_snapshot;  // echoed into the report
};

// The full protocol: per-class train/val sampling, compile per setting,
// `repeats` sampled test sets classified and scored with RP@1. Artifacts
// (program, trace, raw predictions) are persisted under out_dir when set.
// With deterministic providers this is a pure function of (graph, config).
ExperimentReport run_experiment(const ExperimentConfig& config);

// Settings sorted by accuracy (descending; ties keep report order) with mean
// token counts, as an aligned text table.
std::string compare_settings(const ExperimentReport& report);

}  // namespace graphit

#include "graphit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>

namespace graphit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

double rp_at_k(const std::vector<PredictionRecord>& records, int K) {
  if (records.empty()) throw UserError("rp_at_k needs at least one record");
  if (K < 1) throw UserError("rp_at_k needs K >= 1");
  double sum = 0.0;
  for (const PredictionRecord& record : records) {
    if (record.gold_labels.empty()) {
      throw UserError("record for node \"" + record.node + "\" has no gold labels");
    }
    if (!record.valid || record.ranked_labels.empty()) continue;
    int relevant = 0;
    const size_t upto = std::min<size_t>(static_cast<size_t>(K), record.ranked_labels.size());
    for (size_t k = 0; k < upto; ++k) {
      if (record.gold_labels.count(record.ranked_labels[k])) ++relevant;
    }
    const double denom =
        static_cast<double>(std::min<size_t>(static_cast<size_t>(K), record.gold_labels.size()));
    sum += static_cast<double>(relevant) / denom;
  }
  return sum / static_cast<double>(records.size());
}

namespace {

Example make_example(const TextAttributedGraph& graph, const NodeEncoding& encoding) {
  const NodeRecord& record = graph.node(encoding.node);
  if (!record.label) {
    throw UserError("node \"" + encoding.node + "\" has no label but one is required here");
  }
  return Example{encoding.text, graph.label_names(), graph.label_name(*record.label)};
}

void write_predictions(const fs::path& path, const std::vector<NodeId>& nodes,
                       const std::vector<Prediction>& predictions) {
  std::ofstream file(path);
  if (!file) throw UserError("cannot write predictions file " + path.string());
  for (size_t i = 0; i < nodes.size(); ++i) {
    ordered_json obj;
    obj["id"] = nodes[i];
    obj["labels"] = predictions[i].labels;
    obj["reasoning"] = predictions[i].reasoning;
    obj["raw"] = predictions[i].raw;
    obj["valid"] = predictions[i].valid();
    file << obj.dump() << "\n";
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.graph == nullptr) throw UserError("experiment needs a graph");
  if (config.settings.empty()) throw UserError("experiment needs at least one setting");
  if (config.chat == nullptr) throw UserError("experiment needs a chat provider");
  if (config.repeats < 1) throw UserError("repeats must be >= 1");

  const TextAttributedGraph& graph = *config.graph;
  const Clock& clock = config.clock ? *config.clock : default_clock();
  ChatProvider& summarizer = config.summarizer ? *config.summarizer : *config.chat;

  ExperimentReport report;
  report.config_snapshot = config.config_snapshot;

  const std::vector<NodeId> train_ids = graph.sample_per_class(
      Split::Train, config.train_per_class, derive_seed(config.seed, "train"), &report.warnings);
  const std::vector<NodeId> val_ids = graph.sample_per_class(
      Split::Val, config.val_per_class, derive_seed(config.seed, "val"), &report.warnings);
  if (train_ids.empty() || val_ids.empty()) {
    throw UserError("train or validation sample is empty");
  }

  const Metric metric = exact_match_metric();

  for (const EncodingSetting setting : config.settings) {
    SettingResult result;
    result.setting = setting;

    const auto encode_many = [&](const std::vector<NodeId>& ids) {
      std::vector<NodeEncoding> encodings(ids.size());
      parallel_for(ids.size(), config.parallelism, [&](size_t i) {
        encodings[i] = encode_node(graph, ids[i], setting, config.encode, config.embedder,
                                   &summarizer);
      });
      return encodings;
    };

    std::vector<Example> trainset;
    for (const NodeEncoding& encoding : encode_many(train_ids)) {
      trainset.push_back(make_example(graph, encoding));
    }
    std::vector<Example> valset;
    for (const NodeEncoding& encoding : encode_many(val_ids)) {
      valset.push_back(make_example(graph, encoding));
    }

    ClassifierProgram initial;
    initial.signature = default_signature(config.task_noun);
    initial.chat_params = config.chat_params;

    ChatProviders chats{config.chat, config.proposer};
    const OptimizeResult compiled =
        compile(initial, chats, trainset, valset, metric, config.strategy, config.copro,
                config.bootstrap, clock, config.parallelism);
    result.instruction = compiled.program.signature.instruction;
    result.num_demos = static_cast<int>(compiled.program.demos.size());

    fs::path setting_dir;
    if (!config.out_dir.empty()) {
      setting_dir = config.out_dir / std::string(setting_to_string(setting));
      fs::create_directories(setting_dir);
      save_program(compiled.program, setting_dir / "program.json", clock);
      compiled.trace.save_jsonl(setting_dir / "trace.jsonl");
    }

    double token_sum = 0.0;
    size_t token_n = 0;
    for (int repeat = 0; repeat < config.repeats; ++repeat) {
      const uint64_t test_seed =
          derive_seed(derive_seed(config.seed, "test"), static_cast<uint64_t>(repeat));
      const std::vector<NodeId> test_ids =
          graph.sample_test(config.test_n, test_seed, &report.warnings);
      const std::vector<NodeEncoding> encodings = encode_many(test_ids);
      for (const NodeEncoding& encoding : encodings) {
        token_sum += encoding.token_count;
        ++token_n;
      }

      std::vector<Prediction> predictions(test_ids.size());
      std::atomic<int> failures{0};
      parallel_for(test_ids.size(), config.parallelism, [&](size_t i) {
        try {
          predictions[i] = classify(compiled.program, *config.chat, encodings[i].text,
                                    graph.label_names());
        } catch (const std::exception& e) {
          logging::info("classification failed for node \"" + test_ids[i] + "\": " + e.what());
          predictions[i].status = ParseStatus::NoMatch;
          failures.fetch_add(1);
        }
      });
      result.failures += failures.load();

      std::vector<PredictionRecord> records;
      records.reserve(test_ids.size());
      for (size_t i = 0; i < test_ids.size(); ++i) {
        const NodeRecord& node = graph.node(test_ids[i]);
        if (!node.label) {
          throw UserError("test node \"" + test_ids[i] + "\" has no gold label");
        }
        PredictionRecord record;
        record.node = test_ids[i];
        record.ranked_labels = predictions[i].labels;
        record.gold_labels = {graph.label_name(*node.label)};
        record.valid = predictions[i].valid();
        if (!record.valid) ++result.invalid_predictions;
        records.push_back(std::move(record));
      }
      result.per_repeat.push_back(rp_at_k(records, 1));

      if (!setting_dir.empty()) {
        write_predictions(setting_dir / ("predictions_" + std::to_string(repeat) + ".jsonl"),
                          test_ids, predictions);
      }
    }

    double repeat_sum = 0.0;
    for (double score : result.per_repeat) repeat_sum += score;
    result.accuracy = repeat_sum / static_cast<double>(result.per_repeat.size());
    result.mean_tokens = token_n == 0 ? 0.0 : token_sum / static_cast<double>(token_n);
    report.settings.push_back(std::move(result));
  }

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    std::ofstream json_file(config.out_dir / "report.json");
    json_file << report.to_json().dump(2) << "\n";
    std::ofstream table_file(config.out_dir / "report.txt");
    table_file << report.to_table();
  }
  return report;
}

ordered_json ExperimentReport::to_json() const {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["config"] = config_snapshot;
  doc["settings"] = ordered_json::array();
  for (const SettingResult& result : settings) {
    ordered_json obj;
    obj["setting"] = std::string(setting_to_string(result.setting));
    obj["accuracy"] = result.accuracy;
    obj["per_repeat"] = result.per_repeat;
    obj["mean_tokens"] = result.mean_tokens;
    obj["failures"] = result.failures;
    obj["invalid_predictions"] = result.invalid_predictions;
    obj["instruction"] = result.instruction;
    obj["num_demos"] = result.num_demos;
    doc["settings"].push_back(obj);
  }
  doc["warnings"] = warnings;
  return doc;
}

std::string ExperimentReport::to_table() const { return compare_settings(*this); }

std::string compare_settings(const ExperimentReport& report) {
  std::vector<size_t> order(report.settings.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return report.settings[a].accuracy > report.settings[b].accuracy;
  });

  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %10s %12s %9s %8s\n", "setting", "accuracy",
                "mean_tokens", "failures", "invalid");
  out += line;
  for (size_t i : order) {
    const SettingResult& r = report.settings[i];
    std::snprintf(line, sizeof(line), "%-28s %10.4f %12.1f %9d %8d\n",
                  std::string(setting_to_string(r.setting)).c_str(), r.accuracy, r.mean_tokens,
                  r.failures, r.invalid_predictions);
    out += line;
  }
  return out;
}

}  // namespace graphit

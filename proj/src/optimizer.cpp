#include "graphit/optimizer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace graphit {

using nlohmann::ordered_json;

Metric exact_match_metric() {
  Metric metric;
  metric.threshold = 1.0;
  metric.score = [](const Prediction& prediction, const Example& example) {
    if (!prediction.valid()) return 0.0;
    return prediction.labels.front() == example.label ? 1.0 : 0.0;
  };
  return metric;
}

void OptimizationTrace::append(std::string candidate, double score, const Clock& clock) {
  entries.push_back({std::move(candidate), score, clock.now_iso8601()});
}

double OptimizationTrace::best() const {
  double best = 0.0;
  for (const TraceEntry& entry : entries) best = std::max(best, entry.score);
  return best;
}

void OptimizationTrace::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream file(path);
  if (!file) throw UserError("cannot write trace file " + path.string());
  for (const TraceEntry& entry : entries) {
    ordered_json obj;
    obj["candidate"] = entry.candidate;
    obj["score"] = entry.score;
    obj["timestamp"] = entry.timestamp;
    file << obj.dump() << "\n";
  }
}

double evaluate_program(const ClassifierProgram& program, ChatProvider& chat,
                        const std::vector<Example>& examples, const Metric& metric,
                        int parallelism) {
  if (examples.empty()) throw UserError("cannot evaluate on an empty example set");
  std::vector<double> scores(examples.size(), 0.0);
  parallel_for(examples.size(), parallelism, [&](size_t i) {
    try {
      const Prediction prediction =
          classify(program, chat, examples[i].node_features, examples[i].options);
      scores[i] = metric.score(prediction, examples[i]);
    } catch (const std::exception& e) {
      logging::info(std::string("evaluation example failed: ") + e.what());
      scores[i] = 0.0;
    }
  });
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(examples.size());
}

std::string build_proposer_prompt(const std::string& base_instruction,
                                  const std::vector<std::pair<std::string, double>>& history,
                                  int breadth) {
  std::string prompt{kProposerHeader};
  prompt += "\n\nThe current instruction is:\n" + base_instruction + "\n";
  if (!history.empty()) {
    prompt +=
        "\nHere are previously tried instructions with their validation scores "
        "(0 to 1, higher is better):\n";
    for (const auto& [instruction, score] : history) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", score);
      prompt += "\nInstruction: " + instruction + "\nScore: " + buf + "\n";
    }
  }
  prompt += "\nPropose " + std::to_string(breadth) +
            " improved instructions for this task. Reply with a numbered list, one "
            "instruction per line, and nothing else.";
  return prompt;
}

namespace {

// Accepts "1. text", "2) text", "3: text".
std::vector<std::string> parse_numbered_list(std::string_view text) {
  std::vector<std::string> items;
  for (const std::string& raw_line : split(std::string(text), '\n')) {
    const std::string line = trim(raw_line);
    size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size()) continue;
    if (line[i] != '.' && line[i] != ')' && line[i] != ':') continue;
    std::string item = trim(line.substr(i + 1));
    if (item.size() >= 2 && item.front() == '"' && item.back() == '"') {
      item = item.substr(1, item.size() - 2);
    }
    if (!item.empty()) items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

std::vector<std::string> propose_instructions(
    ChatProvider& proposer, const std::string& base_instruction,
    const std::vector<std::pair<std::string, double>>& history, int breadth,
    double proposer_temperature) {
  if (breadth < 1) throw Error("breadth must be >= 1");
  ChatRequest request;
  request.user = build_proposer_prompt(base_instruction, history, breadth);
  request.temperature = proposer_temperature;
  request.max_tokens = 1024;
  const std::string raw = proposer.complete(request);

  std::vector<std::string> parsed = parse_numbered_list(raw);
  if (parsed.empty()) {
    throw ProviderError("proposer returned no numbered list; raw output:\n" + raw);
  }
  std::vector<std::string> proposals;
  const auto known = [&](const std::string& candidate) {
    if (candidate == base_instruction) return true;
    for (const auto& [instruction, score] : history) {
      if (instruction == candidate) return true;
    }
    return std::find(proposals.begin(), proposals.end(), candidate) != proposals.end();
  };
  for (std::string& item : parsed) {
    if (item.size() < 10) continue;  // short/empty proposals dropped
    if (known(item)) continue;
    proposals.push_back(std::move(item));
    if (proposals.size() == static_cast<size_t>(breadth)) break;
  }
  return proposals;
}

OptimizeResult copro_optimize(const ClassifierProgram& program, ChatProvider& proposer,
                              ChatProvider& task_chat, const std::vector<Example>& valset,
                              const Metric& metric, const CoproConfig& config, const Clock& clock,
                              int parallelism) {
  if (valset.empty()) throw UserError("copro needs a non-empty validation set");
  if (config.breadth < 2) throw Error("copro breadth must be >= 2");
  if (config.depth < 1) throw Error("copro depth must be >= 1");

  OptimizeResult result;
  result.program = program;

  const double initial_score =
      evaluate_program(program, task_chat, valset, metric, parallelism);
  result.trace.append(program.signature.instruction, initial_score, clock);

  std::vector<std::pair<std::string, double>> history;
  history.emplace_back(program.signature.instruction, initial_score);

  std::string best_instruction = program.signature.instruction;
  double best_score = initial_score;

  for (int round = 0; round < config.depth; ++round) {
    std::vector<std::string> proposals =
        propose_instructions(proposer, best_instruction, history, config.breadth,
                             config.proposer_temperature);
    if (proposals.empty()) break;
    for (const std::string& instruction : proposals) {
      ClassifierProgram candidate = program;
      candidate.signature.instruction = instruction;
      const double score =
          evaluate_program(candidate, task_chat, valset, metric, parallelism);
      result.trace.append(instruction, score, clock);
      history.emplace_back(instruction, score);
      if (score > best_score) {  // ties keep the earlier candidate
        best_score = score;
        best_instruction = instruction;
      }
    }
  }

  result.program.signature.instruction = best_instruction;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "best_score=%.4f", best_score);
  result.program.provenance.push_back(
      "copro: depth=" + std::to_string(config.depth) + " breadth=" +
      std::to_string(config.breadth) + " " + buf);
  result.best_score = best_score;
  return result;
}

std::vector<Demonstration> bootstrap_demos(const ClassifierProgram& teacher, ChatProvider& chat,
                                           const std::vector<Example>& trainset,
                                           const Metric& metric, int max_demos, uint64_t seed) {
  if (trainset.empty()) throw UserError("bootstrap needs a non-empty trainset");
  std::vector<Demonstration> demos;
  if (max_demos <= 0) return demos;

  std::vector<size_t> order(trainset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  deterministic_shuffle(order, rng);

  for (size_t i : order) {
    const Example& example = trainset[i];
    Prediction prediction;
    try {
      prediction = classify(teacher, chat, example.node_features, example.options);
    } catch (const std::exception& e) {
      logging::info(std::string("bootstrap example failed: ") + e.what());
      continue;
    }
    if (!prediction.valid() || metric.score(prediction, example) < metric.threshold) continue;
    Demonstration demo;
    demo.node_features = example.node_features;
    demo.options = example.options;
    demo.reasoning = normalize_whitespace(prediction.reasoning);
    demo.output = prediction.labels.front();
    demos.push_back(std::move(demo));
    if (demos.size() == static_cast<size_t>(max_demos)) break;
  }
  return demos;
}

OptimizeResult random_search_fewshot(const ClassifierProgram& program, ChatProvider& chat,
                                     const std::vector<Example>& trainset,
                                     const std::vector<Example>& valset, const Metric& metric,
                                     const BootstrapConfig& config, const Clock& clock,
                                     int parallelism) {
  if (trainset.empty() || valset.empty()) {
    throw UserError("few-shot search needs non-empty train and validation sets");
  }
  if (config.num_candidate_programs < 1) throw Error("num_candidate_programs must be >= 1");

  struct CandidateProgram {
    ClassifierProgram program;
    std::string description;
  };
  std::vector<CandidateProgram> candidates;

  ClassifierProgram baseline = program;
  baseline.demos.clear();
  candidates.push_back({baseline, "baseline: 0 demos"});
  if (!program.demos.empty()) {
    // keep-best must hold against the incoming program, demos included
    candidates.push_back(
        {program, "input program: " + std::to_string(program.demos.size()) + " demos"});
  }

  for (int c = 0; c < config.num_candidate_programs; ++c) {
    const uint64_t candidate_seed = derive_seed(config.seed, static_cast<uint64_t>(c));
    ClassifierProgram candidate = program;
    candidate.demos.clear();
    if (config.max_labeled_demos > 0) {
      std::vector<size_t> order(trainset.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed(candidate_seed, "labeled"));
      deterministic_shuffle(order, rng);
      const size_t take =
          std::min<size_t>(static_cast<size_t>(config.max_labeled_demos), order.size());
      for (size_t i = 0; i < take; ++i) {
        const Example& example = trainset[order[i]];
        candidate.demos.push_back({example.node_features, example.options, "", example.label});
      }
    }
    const std::vector<Demonstration> bootstrapped =
        bootstrap_demos(program, chat, trainset, metric, config.max_bootstrapped_demos,
                        derive_seed(candidate_seed, "bootstrap"));
    candidate.demos.insert(candidate.demos.end(), bootstrapped.begin(), bootstrapped.end());
    candidates.push_back({std::move(candidate), "candidate " + std::to_string(c) + ": " +
                                                    std::to_string(bootstrapped.size()) +
                                                    " bootstrapped demos"});
  }

  OptimizeResult result;
  long best_index = -1;
  double best_score = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double score =
        evaluate_program(candidates[i].program, chat, valset, metric, parallelism);
    result.trace.append(candidates[i].description, score, clock);
    const bool better =
        best_index < 0 || score > best_score ||
        (score == best_score && candidates[i].program.demos.size() <
                                    candidates[static_cast<size_t>(best_index)].program.demos.size());
    if (better) {
      best_index = static_cast<long>(i);
      best_score = score;
    }
  }

  result.program = candidates[static_cast<size_t>(best_index)].program;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "best_score=%.4f", best_score);
  result.program.provenance.push_back(
      "fewshot: candidates=" + std::to_string(config.num_candidate_programs) +
      " max_demos=" + std::to_string(config.max_bootstrapped_demos) + " demos=" +
      std::to_string(result.program.demos.size()) + " " + buf);
  result.best_score = best_score;
  return result;
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "copro_then_fewshot") return Strategy::CoproThenFewshot;
  if (name == "fewshot_only") return Strategy::FewshotOnly;
  if (name == "copro_only") return Strategy::CoproOnly;
  throw UserError("unknown strategy \"" + std::string(name) +
                  "\" (expected copro_then_fewshot|fewshot_only|copro_only)");
}

std::string_view strategy_to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::CoproThenFewshot: return "copro_then_fewshot";
    case Strategy::FewshotOnly: return "fewshot_only";
    case Strategy::CoproOnly: return "copro_only";
  }
  return "?";
}

OptimizeResult compile(const ClassifierProgram& program, const ChatProviders& chats,
                       const std::vector<Example>& trainset, const std::vector<Example>& valset,
                       const Metric& metric, Strategy strategy, const CoproConfig& copro_config,
                       const BootstrapConfig& bootstrap_config, const Clock& clock,
                       int parallelism) {
  if (chats.task == nullptr) throw Error("compile needs a task chat provider");
  ChatProvider& task = *chats.task;
  ChatProvider& proposer = chats.proposer ? *chats.proposer : task;

  OptimizeResult result;
  result.program = program;

  if (strategy == Strategy::CoproThenFewshot || strategy == Strategy::CoproOnly) {
    OptimizeResult stage = copro_optimize(result.program, proposer, task, valset, metric,
                                          copro_config, clock, parallelism);
    result.program = std::move(stage.program);
    result.best_score = stage.best_score;
    for (TraceEntry& entry : stage.trace.entries) {
      entry.candidate = "copro | " + entry.candidate;
      result.trace.entries.push_back(std::move(entry));
    }
  }
  if (strategy == Strategy::CoproThenFewshot || strategy == Strategy::FewshotOnly) {
    OptimizeResult stage = random_search_fewshot(result.program, task, trainset, valset, metric,
                                                 bootstrap_config, clock, parallelism);
    result.program = std::move(stage.program);
    result.best_score = stage.best_score;
    for (TraceEntry& entry : stage.trace.entries) {
      entry.candidate = "fewshot | " + entry.candidate;
      result.trace.entries.push_back(std::move(entry));
    }
  }
  return result;
}

}  // namespace graphit

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "graphit/classifier.hpp"
#include "graphit/providers.hpp"
#include "graphit/util.hpp"

namespace graphit {

// One labeled node as the optimizers see it: encoded features, the option
// list shown to the model, and the gold label.
struct Example {
  std::string node_features;
  std::vector<std::string> options;
  std::string label;
};

// Score in [0,1] plus the acceptance threshold lambda used by bootstrapping.
// score must be defined for invalid predictions (they score 0).
struct Metric {
  std::function<double(const Prediction&, const Example&)> score;
  double threshold = 1.0;
};

// RP@1 per example: 1 when the top-ranked label equals the gold label.
Metric exact_match_metric();

struct CoproConfig {
  int breadth = 10;
  int depth = 3;
  double proposer_temperature = 1.0;
};

struct BootstrapConfig {
  int max_bootstrapped_demos = 4;
  int max_labeled_demos = 0;
  int num_candidate_programs = 16;
  uint64_t seed = 0;
};

struct TraceEntry {
  std::string candidate;
  double score = 0.0;
  std::string timestamp;
};

// Append-only record of every candidate evaluated; best() is monotone over
// the prefix.
struct OptimizationTrace {
  std::vector<TraceEntry> entries;

  void append(std::string candidate, double score, const Clock& clock);
  double best() const;
  void save_jsonl(const std::filesystem::path& path) const;
};

struct OptimizeResult {
  ClassifierProgram program;
  OptimizationTrace trace;
  double best_score = 0.0;
};

// Mean metric score over the examples. Failed predictions score 0. Scores
// are collected per index and summed in index order, so parallelism cannot
// change the result.
double evaluate_program(const ClassifierProgram& program, ChatProvider& chat,
                        const std::vector<Example>& examples, const Metric& metric,
                        int parallelism = 1);

// Meta-prompt header, pinned verbatim so scripted mocks can key on it.
inline constexpr std::string_view kProposerHeader =
    "You are optimizing the instruction of a prompt for a classification task.";

std::string build_proposer_prompt(const std::string& base_instruction,
                                  const std::vector<std::pair<std::string, double>>& history,
                                  int breadth);

// One meta-prompt call; parses a numbered list of alternatives, drops
// proposals that duplicate the history or are shorter than 10 characters.
// Unparseable proposer output raises an error carrying the raw text.
std::vector<std::string> propose_instructions(
    ChatProvider& proposer, const std::string& base_instruction,
    const std::vector<std::pair<std::string, double>>& history, int breadth,
    double proposer_temperature = 1.0);

// Instruction search: `depth` rounds of `breadth` proposals conditioned on
// the scored history, keeping the globally best instruction (ties keep the
// earlier candidate). A round with zero valid proposals terminates early.
OptimizeResult copro_optimize(const ClassifierProgram& program, ChatProvider& proposer,
                              ChatProvider& task_chat, const std::vector<Example>& valset,
                              const Metric& metric, const CoproConfig& config,
                              const Clock& clock = default_clock(), int parallelism = 1);

// Runs the teacher over the trainset in seeded shuffled order and records a
// demonstration for every prediction with metric >= threshold, stopping at
// max_demos.
std::vector<Demonstration> bootstrap_demos(const ClassifierProgram& teacher, ChatProvider& chat,
                                           const std::vector<Example>& trainset,
                                           const Metric& metric, int max_demos, uint64_t seed);

// Candidate programs: the zero-demo baseline plus num_candidate_programs
// bootstrapped variants (each from a distinct derived seed, with up to
// max_labeled_demos raw labeled examples prepended). Every candidate is
// scored on the valset; argmax wins, ties prefer fewer demos then the
// earlier candidate.
OptimizeResult random_search_fewshot(const ClassifierProgram& program, ChatProvider& chat,
                                     const std::vector<Example>& trainset,
                                     const std::vector<Example>& valset, const Metric& metric,
                                     const BootstrapConfig& config,
                                     const Clock& clock = default_clock(), int parallelism = 1);

enum class Strategy { CoproThenFewshot, FewshotOnly, CoproOnly };

Strategy strategy_from_string(std::string_view name);
std::string_view strategy_to_string(Strategy strategy);

struct ChatProviders {
  ChatProvider* task = nullptr;
  ChatProvider* proposer = nullptr;  // nullptr -> use task
};

// Sequential composition of the optimizers per strategy; each stage appends
// a provenance line to the returned program.
OptimizeResult compile(const ClassifierProgram& program, const ChatProviders& chats,
                       const std::vector<Example>& trainset, const std::vector<Example>& valset,
                       const Metric& metric, Strategy strategy, const CoproConfig& copro_config,
                       const BootstrapConfig& bootstrap_config,
                       const Clock& clock = default_clock(), int parallelism = 1);

}  // namespace graphit

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphit/providers.hpp"
#include "graphit/util.hpp"

namespace graphit {

struct FieldSpec {
  std::string name;
  std::string prefix;
  std::string description;  // shown in the format block when non-empty
};

// Declarative prompt schema: instruction, named input fields with prefixes,
// named output fields.
struct Signature {
  std::string instruction;
  std::vector<FieldSpec> input_fields;
  std::vector<FieldSpec> output_fields;
};

// A worked example recorded from a successful prediction and replayed inside
// the prompt. output is always one of options.
struct Demonstration {
  std::string node_features;
  std::vector<std::string> options;
  std::string reasoning;
  std::string output;
};

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 512;
};

// The unit the optimizers mutate: signature + demonstrations + chat params.
// Immutable value semantics; optimizers return new programs.
struct ClassifierProgram {
  Signature signature;
  std::vector<Demonstration> demos;
  ChatParams chat_params;
  std::vector<std::string> provenance;  // one entry per optimizer stage
};

enum class ParseStatus { Ok, NoMatch, Ambiguous };

struct Prediction {
  std::vector<std::string> labels;  // ranked, typically length 1, no duplicates
  std::string reasoning;
  std::string raw;
  ParseStatus status = ParseStatus::Ok;

  bool valid() const { return status == ParseStatus::Ok && !labels.empty(); }
};

// Instruction: "Given a snippet from a <task_noun>, pick the most applicable
// category from the options." with Paper/Options inputs and
// Reasoning/Category outputs. The Reasoning prefix carries the full
// chain-of-thought stem.
Signature default_signature(const std::string& task_noun);

// Renders the full prompt: instruction block, format block, one block per
// demonstration, and the query block with the Reasoning prefix left
// incomplete. Blocks are separated by "\n\n---\n\n"; options join with ", ".
// The output is byte-stable: optimizers and the response cache key on it.
std::string render_prompt(const ClassifierProgram& program, std::string_view node_features,
                          const std::vector<std::string>& options);

// Maps a raw completion to a label. Takes the text after the last
// "Category:" (whole text when absent), normalizes, then matches: exact
// normalized equality first, then unique substring in either direction.
// NoMatch / Ambiguous are reported in the status, never thrown.
Prediction parse_prediction(std::string_view raw, const std::vector<std::string>& options);

// render -> complete -> parse. The raw completion is always retained.
Prediction classify(const ClassifierProgram& program, ChatProvider& chat,
                    std::string_view node_features, const std::vector<std::string>& options,
                    const std::string& model = "");

// Program artifact (de)serialization. created_at comes from the clock;
// schema: {instruction, input_fields, output_fields, demos, chat_params,
// created_at, optimizer_provenance}.
nlohmann::ordered_json program_to_json(const ClassifierProgram& program,
                                       const Clock& clock = default_clock());
ClassifierProgram program_from_json(const nlohmann::json& doc);
void save_program(const ClassifierProgram& program, const std::filesystem::path& path,
                  const Clock& clock = default_clock());
ClassifierProgram load_program(const std::filesystem::path& path);

}  // namespace graphit

#include "graphit/classifier.hpp"

#include <algorithm>
#include <fstream>

namespace graphit {

using nlohmann::json;
using nlohmann::ordered_json;

Signature default_signature(const std::string& task_noun) {
  if (trim(task_noun).empty()) throw UserError("task noun must be non-empty");
  Signature signature;
  signature.instruction = "Given a snippet from a " + task_noun +
                          ", pick the most applicable category from the options.";
  signature.input_fields = {
      {"NodeFeatures", "Paper:", ""},
      {"Options", "Options:", "List of comma-separated options to choose from"},
  };
  signature.output_fields = {
      {"Reasoning", "Reasoning: Let's think step by step in order to", ""},
      {"Category", "Category:", ""},
  };
  return signature;
}

namespace {

// Placeholder shown in the format block: first word of the prefix, lowercased,
// without the colon. "Paper:" -> ${paper}, the chain-of-thought prefix
// "Reasoning: ..." -> ${reasoning}.
std::string placeholder(const FieldSpec& field) {
  std::string word = field.prefix.substr(0, field.prefix.find(' '));
  if (!word.empty() && word.back() == ':') word.pop_back();
  return "${" + to_lower(word) + "}";
}

std::string format_line(const FieldSpec& field) {
  return field.prefix + " " + (field.description.empty() ? placeholder(field) : field.description);
}

// Value line: prefix plus the value; a truly empty value leaves the bare
// prefix (the query block's incomplete Reasoning line).
std::string value_line(const FieldSpec& field, std::string_view value) {
  if (value.empty()) return field.prefix;
  return field.prefix + " " + std::string(value);
}

}  // namespace

std::string render_prompt(const ClassifierProgram& program, std::string_view node_features,
                          const std::vector<std::string>& options) {
  if (options.empty()) throw UserError("options must be non-empty");
  const Signature& signature = program.signature;
  if (signature.input_fields.size() < 2 || signature.output_fields.empty()) {
    throw Error("signature needs at least two input fields and one output field");
  }

  std::vector<std::string> blocks;
  blocks.push_back(signature.instruction);

  std::string format_block = "Follow the following format.\n";
  for (const FieldSpec& field : signature.input_fields) {
    format_block += "\n" + format_line(field);
  }
  for (const FieldSpec& field : signature.output_fields) {
    format_block += "\n" + format_line(field);
  }
  blocks.push_back(format_block);

  const FieldSpec& features_field = signature.input_fields[0];
  const FieldSpec& options_field = signature.input_fields[1];

  for (const Demonstration& demo : program.demos) {
    std::string block = value_line(features_field, demo.node_features);
    block += "\n" + value_line(options_field, join(demo.options, ", "));
    for (const FieldSpec& field : signature.output_fields) {
      const std::string& value = field.name == "Reasoning" ? demo.reasoning : demo.output;
      block += "\n" + value_line(field, value);
    }
    blocks.push_back(block);
  }

  std::string query = value_line(features_field, node_features);
  query += "\n" + value_line(options_field, join(options, ", "));
  query += "\n" + signature.output_fields.front().prefix;
  blocks.push_back(query);

  return join(blocks, "\n\n---\n\n");
}

namespace {

// Lowercase, punctuation replaced by spaces, whitespace collapsed.
std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;
  for (unsigned char c : text) {
    const bool keep = std::isalnum(c) != 0 || c >= 0x80;
    if (keep) {
      out.push_back(static_cast<char>(std::tolower(c)));
      in_space = false;
    } else if (!in_space) {
      out.push_back(' ');
      in_space = true;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Tier 1: exact normalized equality. Tier 2: substring in either direction.
// Returns matching option indices for the tier that produced any.
std::vector<size_t> match_option(const std::string& normalized_tail,
                                 const std::vector<std::string>& normalized_options) {
  std::vector<size_t> exact;
  for (size_t i = 0; i < normalized_options.size(); ++i) {
    if (normalized_options[i] == normalized_tail) exact.push_back(i);
  }
  if (!exact.empty()) return exact;
  std::vector<size_t> fuzzy;
  for (size_t i = 0; i < normalized_options.size(); ++i) {
    if (normalized_options[i].empty() || normalized_tail.empty()) continue;
    if (contains(normalized_tail, normalized_options[i]) ||
        contains(normalized_options[i], normalized_tail)) {
      fuzzy.push_back(i);
    }
  }
  return fuzzy;
}

}  // namespace

Prediction parse_prediction(std::string_view raw, const std::vector<std::string>& options) {
  if (options.empty()) throw UserError("options must be non-empty");
  Prediction prediction;
  prediction.raw = std::string(raw);

  constexpr std::string_view kCategory = "Category:";
  constexpr std::string_view kReasoning = "Reasoning:";

  const size_t category_pos = raw.rfind(kCategory);
  std::string_view tail =
      category_pos == std::string_view::npos ? raw : raw.substr(category_pos + kCategory.size());

  std::string_view before = category_pos == std::string_view::npos ? std::string_view{}
                                                                   : raw.substr(0, category_pos);
  const size_t reasoning_pos = before.rfind(kReasoning);
  if (reasoning_pos != std::string_view::npos) {
    prediction.reasoning = trim(before.substr(reasoning_pos + kReasoning.size()));
  } else {
    prediction.reasoning = trim(before);
  }

  std::vector<std::string> normalized_options;
  normalized_options.reserve(options.size());
  for (const std::string& option : options) normalized_options.push_back(normalize_for_match(option));

  // An explicit comma-separated list after Category: yields ranked
  // alternates, but only when every segment maps to an option.
  const std::vector<std::string> segments = split(std::string(tail), ',');
  if (segments.size() > 1) {
    std::vector<std::string> ranked;
    bool all_matched = true;
    for (const std::string& segment : segments) {
      const std::vector<size_t> matches =
          match_option(normalize_for_match(segment), normalized_options);
      if (matches.size() != 1) {
        all_matched = false;
        break;
      }
      const std::string& label = options[matches[0]];
      if (std::find(ranked.begin(), ranked.end(), label) == ranked.end()) {
        ranked.push_back(label);
      }
    }
    if (all_matched && !ranked.empty()) {
      prediction.labels = std::move(ranked);
      return prediction;
    }
  }

  const std::vector<size_t> matches = match_option(normalize_for_match(tail), normalized_options);
  if (matches.empty()) {
    prediction.status = ParseStatus::NoMatch;
    return prediction;
  }
  if (matches.size() > 1) {
    prediction.status = ParseStatus::Ambiguous;
    return prediction;
  }
  prediction.labels = {options[matches[0]]};
  return prediction;
}

Prediction classify(const ClassifierProgram& program, ChatProvider& chat,
                    std::string_view node_features, const std::vector<std::string>& options,
                    const std::string& model) {
  ChatRequest request;
  request.user = render_prompt(program, node_features, options);
  request.temperature = program.chat_params.temperature;
  request.max_tokens = program.chat_params.max_tokens;
  request.model = model;
  const std::string completion = chat.complete(request);
  return parse_prediction(completion, options);
}

namespace {

ordered_json field_to_json(const FieldSpec& field, bool with_description) {
  ordered_json obj;
  obj["name"] = field.name;
  obj["prefix"] = field.prefix;
  if (with_description) obj["description"] = field.description;
  return obj;
}

FieldSpec field_from_json(const json& obj) {
  FieldSpec field;
  field.name = obj.at("name").get<std::string>();
  field.prefix = obj.at("prefix").get<std::string>();
  field.description = obj.value("description", "");
  return field;
}

}  // namespace

ordered_json program_to_json(const ClassifierProgram& program, const Clock& clock) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["instruction"] = program.signature.instruction;
  doc["input_fields"] = ordered_json::array();
  for (const FieldSpec& field : program.signature.input_fields) {
    doc["input_fields"].push_back(field_to_json(field, true));
  }
  doc["output_fields"] = ordered_json::array();
  for (const FieldSpec& field : program.signature.output_fields) {
    doc["output_fields"].push_back(field_to_json(field, false));
  }
  doc["demos"] = ordered_json::array();
  for (const Demonstration& demo : program.demos) {
    ordered_json obj;
    obj["node_features"] = demo.node_features;
    obj["options"] = demo.options;
    obj["reasoning"] = demo.reasoning;
    obj["output"] = demo.output;
    doc["demos"].push_back(obj);
  }
  doc["chat_params"] = {{"temperature", program.chat_params.temperature},
                        {"max_tokens", program.chat_params.max_tokens}};
  doc["created_at"] = clock.now_iso8601();
  doc["optimizer_provenance"] = program.provenance;
  return doc;
}

ClassifierProgram program_from_json(const json& doc) {
  ClassifierProgram program;
  program.signature.instruction = doc.at("instruction").get<std::string>();
  for (const auto& field : doc.at("input_fields")) {
    program.signature.input_fields.push_back(field_from_json(field));
  }
  for (const auto& field : doc.at("output_fields")) {
    program.signature.output_fields.push_back(field_from_json(field));
  }
  if (doc.contains("demos")) {
    for (const auto& obj : doc["demos"]) {
      Demonstration demo;
      demo.node_features = obj.at("node_features").get<std::string>();
      demo.options = obj.at("options").get<std::vector<std::string>>();
      demo.reasoning = obj.value("reasoning", "");
      demo.output = obj.at("output").get<std::string>();
      if (std::find(demo.options.begin(), demo.options.end(), demo.output) ==
          demo.options.end()) {
        throw UserError("demonstration output \"" + demo.output + "\" is not one of its options");
      }
      program.demos.push_back(std::move(demo));
    }
  }
  if (doc.contains("chat_params")) {
    program.chat_params.temperature = doc["chat_params"].value("temperature", 0.0);
    program.chat_params.max_tokens = doc["chat_params"].value("max_tokens", 512);
  }
  if (doc.contains("optimizer_provenance")) {
    program.provenance = doc["optimizer_provenance"].get<std::vector<std::string>>();
  }
  return program;
}

void save_program(const ClassifierProgram& program, const std::filesystem::path& path,
                  const Clock& clock) {
  std::ofstream file(path);
  if (!file) throw UserError("cannot write program file " + path.string());
  file << program_to_json(program, clock).dump(2) << "\n";
}

ClassifierProgram load_program(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw UserError("cannot open program file " + path.string());
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw UserError("program file " + path.string() + ": " + e.what());
  }
  try {
    return program_from_json(doc);
  } catch (const json::exception& e) {
    throw UserError("program file " + path.string() + ": " + e.what());
  }
}

}  // namespace graphit

#include "graphit/encoding.hpp"

#include <algorithm>
#include <cmath>

namespace graphit {

EncodingSetting setting_from_string(std::string_view name) {
  if (name == "text") return EncodingSetting::TextOnly;
  if (name == "text+labels") return EncodingSetting::TextLabels;
  if (name == "text+labels+summary") return EncodingSetting::TextLabelsSummary;
  if (name == "text+labels+keyphrases") return EncodingSetting::TextLabelsKeyphrases;
  throw UserError("unknown encoding setting \"" + std::string(name) +
                  "\" (expected text|text+labels|text+labels+summary|text+labels+keyphrases)");
}

std::string_view setting_to_string(EncodingSetting setting) {
  switch (setting) {
    case EncodingSetting::TextOnly: return "text";
    case EncodingSetting::TextLabels: return "text+labels";
    case EncodingSetting::TextLabelsSummary: return "text+labels+summary";
    case EncodingSetting::TextLabelsKeyphrases: return "text+labels+keyphrases";
  }
  return "?";
}

const std::vector<EncodingSetting>& all_settings() {
  static const std::vector<EncodingSetting> settings = {
      EncodingSetting::TextOnly, EncodingSetting::TextLabels, EncodingSetting::TextLabelsSummary,
      EncodingSetting::TextLabelsKeyphrases};
  return settings;
}

TokenizerMode tokenizer_from_string(std::string_view name) {
  if (name == "whitespace") return TokenizerMode::Whitespace;
  if (name == "approx_bpe") return TokenizerMode::ApproxBpe;
  throw UserError("unknown tokenizer mode \"" + std::string(name) +
                  "\" (expected whitespace|approx_bpe)");
}

int token_count(std::string_view text, TokenizerMode mode) {
  if (mode == TokenizerMode::ApproxBpe) {
    return static_cast<int>((text.size() + 3) / 4);
  }
  int count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

namespace {

std::string concatenated_neighbor_text(const TextAttributedGraph& graph, const NodeId& node) {
  std::vector<std::string> texts;
  for (const NodeId& neighbor : graph.neighbors(node)) {
    texts.push_back(graph.node(neighbor).text);
  }
  return join(texts, " ");
}

std::string truncate_tokens(std::string_view text, int max_tokens) {
  if (max_tokens <= 0) return std::string(text);
  int count = 0;
  bool in_token = false;
  for (size_t i = 0; i < text.size(); ++i) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      if (++count > max_tokens) return trim(text.substr(0, i));
    }
  }
  return std::string(text);
}

}  // namespace

std::vector<std::string> neighbor_keyphrases(const TextAttributedGraph& graph, const NodeId& node,
                                             const KpeConfig& config, EmbeddingProvider& embedder,
                                             std::vector<std::string>* warnings) {
  if (graph.neighbors(node).empty()) return {};
  const std::string text = concatenated_neighbor_text(graph, node);
  if (trim(text).empty()) {
    const std::string message = "node \"" + node + "\": neighbor texts are empty";
    if (warnings) warnings->push_back(message);
    logging::warn(message);
    return {};
  }
  return extract_keyphrases(text, config, embedder, warnings);
}

std::string neighbor_summary(const TextAttributedGraph& graph, const NodeId& node,
                             ChatProvider& chat, int max_tokens, const std::string& model) {
  if (graph.neighbors(node).empty()) {
    throw UserError("node \"" + node + "\" has no neighbors to summarize");
  }
  ChatRequest request;
  request.user = std::string(kSummaryInstruction) + "\n\n" +
                 concatenated_neighbor_text(graph, node);
  request.temperature = 0.0;
  request.max_tokens = max_tokens;
  request.model = model;
  const std::string summary = chat.complete(request);
  return truncate_tokens(normalize_whitespace(summary), max_tokens);
}

std::string render_encoding(std::string_view node_text, EncodingSetting setting,
                            const std::vector<std::string>& labels,
                            const std::vector<std::string>& keyphrases,
                            std::string_view summary) {
  std::string out{node_text};
  if (setting == EncodingSetting::TextOnly) return out;

  out.append("\nNeighbor labels: ");
  out.append(labels.empty() ? "none" : join(labels, ", "));

  if (setting == EncodingSetting::TextLabelsSummary) {
    out.append("\nNeighbor summary: ");
    out.append(summary.empty() ? "none" : std::string(summary));
  } else if (setting == EncodingSetting::TextLabelsKeyphrases) {
    out.append("\nNeighbor keyphrases: ");
    out.append(keyphrases.empty() ? "none" : join(keyphrases, "; "));
  }
  return out;
}

NodeEncoding encode_node(const TextAttributedGraph& graph, const NodeId& node,
                         EncodingSetting setting, const EncodeOptions& options,
                         EmbeddingProvider* embedder, ChatProvider* chat,
                         std::vector<std::string>* warnings) {
  const NodeRecord& record = graph.node(node);
  const std::string text =
      truncate_tokens(normalize_whitespace(record.text), options.text_budget_tokens);

  std::vector<std::string> labels;
  std::vector<std::string> keyphrases;
  std::string summary;
  if (setting != EncodingSetting::TextOnly) {
    labels = graph.neighbor_labels(node, options.label_policy);
  }
  if (setting == EncodingSetting::TextLabelsKeyphrases) {
    if (embedder == nullptr) throw Error("keyphrase encoding requires an embedding provider");
    keyphrases = neighbor_keyphrases(graph, node, options.kpe, *embedder, warnings);
  }
  if (setting == EncodingSetting::TextLabelsSummary) {
    if (chat == nullptr) throw Error("summary encoding requires a chat provider");
    if (!graph.neighbors(node).empty()) {
      summary = neighbor_summary(graph, node, *chat, options.summary_max_tokens,
                                 options.summary_model);
    }
  }

  NodeEncoding encoding;
  encoding.node = node;
  encoding.setting = setting;
  encoding.text = render_encoding(text, setting, labels, keyphrases, summary);
  encoding.token_count = token_count(encoding.text, options.token_mode);
  return encoding;
}

ParsedEncoding parse_encoding(const std::string& encoded) {
  ParsedEncoding parsed;
  const std::vector<std::string> lines = split(encoded, '\n');
  if (lines.empty()) return parsed;
  parsed.text = lines[0];
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    constexpr std::string_view kLabels = "Neighbor labels: ";
    constexpr std::string_view kSummary = "Neighbor summary: ";
    constexpr std::string_view kKeyphrases = "Neighbor keyphrases: ";
    if (line.rfind(kLabels, 0) == 0) {
      const std::string payload = line.substr(kLabels.size());
      if (payload != "none") {
        for (const std::string& part : split(payload, ',')) parsed.labels.push_back(trim(part));
      }
    } else if (line.rfind(kSummary, 0) == 0) {
      const std::string payload = line.substr(kSummary.size());
      if (payload != "none") parsed.summary = payload;
    } else if (line.rfind(kKeyphrases, 0) == 0) {
      const std::string payload = line.substr(kKeyphrases.size());
      if (payload != "none") {
        for (const std::string& part : split(payload, ';')) {
          parsed.keyphrases.push_back(trim(part));
        }
      }
    } else {
      throw Error("unrecognized encoding line: \"" + line + "\"");
    }
  }
  return parsed;
}

TokenRatioReport token_ratio_report(const TextAttributedGraph& graph,
                                    const std::vector<NodeId>& nodes, const EncodeOptions& options,
                                    EmbeddingProvider& embedder, ChatProvider& chat) {
  if (nodes.empty()) throw UserError("token ratio report needs at least one node");
  TokenRatioReport report;
  report.histogram.assign(21, 0);
  for (const NodeId& node : nodes) {
    if (graph.neighbors(node).empty()) {
      ++report.skipped;
      continue;
    }
    const std::string summary =
        neighbor_summary(graph, node, chat, options.summary_max_tokens, options.summary_model);
    const std::vector<std::string> phrases =
        neighbor_keyphrases(graph, node, options.kpe, embedder);
    const int summary_tokens = token_count(summary, options.token_mode);
    const int keyphrase_tokens = token_count(join(phrases, "; "), options.token_mode);
    if (keyphrase_tokens == 0) {
      ++report.skipped;
      continue;
    }
    const double ratio = static_cast<double>(summary_tokens) / keyphrase_tokens;
    report.ratios.push_back(ratio);
    const size_t bin = std::min<size_t>(static_cast<size_t>(ratio / 0.5), 20);
    ++report.histogram[bin];
  }
  if (!report.ratios.empty()) {
    double sum = 0.0;
    for (double r : report.ratios) sum += r;
    report.mean = sum / static_cast<double>(report.ratios.size());
    std::vector<double> sorted = report.ratios;
    std::sort(sorted.begin(), sorted.end());
    const size_t mid = sorted.size() / 2;
    report.median =
        sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  }
  return report;
}

}  // namespace graphit

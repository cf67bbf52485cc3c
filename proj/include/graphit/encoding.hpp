#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphit/graph.hpp"
#include "graphit/keyphrase.hpp"
#include "graphit/providers.hpp"

namespace graphit {

// The four node-encoding ablation settings, from bare text attributes up to
// text + neighbor labels + neighbor keyphrases.
enum class EncodingSetting { TextOnly, TextLabels, TextLabelsSummary, TextLabelsKeyphrases };

EncodingSetting setting_from_string(std::string_view name);
std::string_view setting_to_string(EncodingSetting setting);
const std::vector<EncodingSetting>& all_settings();

enum class TokenizerMode { Whitespace, ApproxBpe };

TokenizerMode tokenizer_from_string(std::string_view name);

struct NodeEncoding {
  NodeId node;
  EncodingSetting setting = EncodingSetting::TextOnly;
  std::string text;
  int token_count = 0;
};

// Fixed instruction for neighbor summaries. Pinned verbatim so scripted
// providers can key on it.
inline constexpr std::string_view kSummaryInstruction =
    "Summarize the following text in one short paragraph, focusing on its main topics.";

struct EncodeOptions {
  LabelPolicy label_policy = LabelPolicy::NonTestOnly;
  int text_budget_tokens = 512;  // whitespace tokens kept from the node text
  TokenizerMode token_mode = TokenizerMode::Whitespace;
  KpeConfig kpe;
  int summary_max_tokens = 128;
  std::string summary_model;  // chat model for summaries; empty -> provider default
};

// Keyphrases extracted from the concatenation of the node's neighbor texts
// (neighbor order, single-space joins). Isolated node -> empty list.
std::vector<std::string> neighbor_keyphrases(const TextAttributedGraph& graph, const NodeId& node,
                                             const KpeConfig& config, EmbeddingProvider& embedder,
                                             std::vector<std::string>* warnings = nullptr);

// One-paragraph summary of the concatenated neighbor texts via a single chat
// call, truncated to max_tokens whitespace tokens. Errors on an isolated node.
std::string neighbor_summary(const TextAttributedGraph& graph, const NodeId& node,
                             ChatProvider& chat, int max_tokens, const std::string& model = "");

// Canonical template (newline-separated, every field single-line):
//   <node text>
//   Neighbor labels: <l1>, <l2>, ...        | Neighbor labels: none
//   Neighbor summary: <summary>             (summary setting)
//   Neighbor keyphrases: <p1>; <p2>; ...    | Neighbor keyphrases: none (keyphrase setting)
std::string render_encoding(std::string_view node_text, EncodingSetting setting,
                            const std::vector<std::string>& labels,
                            const std::vector<std::string>& keyphrases,
                            std::string_view summary);

// Assembles the encoding for one node, computing labels / keyphrases /
// summary as the setting requires. embedder is needed for the keyphrase
// setting, chat for the summary setting.
NodeEncoding encode_node(const TextAttributedGraph& graph, const NodeId& node,
                         EncodingSetting setting, const EncodeOptions& options,
                         EmbeddingProvider* embedder = nullptr, ChatProvider* chat = nullptr,
                         std::vector<std::string>* warnings = nullptr);

// whitespace: count of maximal non-space runs. approx_bpe: ceil(bytes / 4),
// a documented approximation.
int token_count(std::string_view text, TokenizerMode mode);

// Inverse of render_encoding for canonical encodings.
struct ParsedEncoding {
  std::string text;
  std::vector<std::string> labels;
  std::vector<std::string> keyphrases;
  std::optional<std::string> summary;
};

ParsedEncoding parse_encoding(const std::string& encoded);

// Per-node summary/keyphrase token ratios plus a fixed-bin histogram
// (bins 0..10 step 0.5 and one overflow bin), mean, and median. Nodes where
// the ratio is undefined (isolated, or zero keyphrase tokens) are skipped and
// counted.
struct TokenRatioReport {
  std::vector<double> ratios;
  std::vector<int> histogram;  // 20 half-open bins + 1 overflow
  double mean = 0.0;
  double median = 0.0;
  int skipped = 0;
};

TokenRatioReport token_ratio_report(const TextAttributedGraph& graph,
                                    const std::vector<NodeId>& nodes, const EncodeOptions& options,
                                    EmbeddingProvider& embedder, ChatProvider& chat);

}  // namespace graphit

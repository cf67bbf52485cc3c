#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "graphit/encoding.hpp"

using namespace graphit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("graphit_enc_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path);
  file << content;
}

// star: center x (train, A) with labeled neighbors p (A, train), q (B, val),
// plus isolated node z
TextAttributedGraph star_graph(const TempDir& dir) {
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"x","text":"center node studies graph learning","label":"A","split":"train"})"
             "\n"
             R"({"id":"p","text":"neighbor text about neural networks","label":"A","split":"train"})"
             "\n"
             R"({"id":"q","text":"neighbor text about routing networks","label":"B","split":"val"})"
             "\n"
             R"({"id":"z","text":"isolated node text","label":"A","split":"train"})"
             "\n");
  write_file(dir.path / "edges.txt", "x,p\nx,q\n");
  return TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");
}

}  // namespace

TEST_SUITE("encoding") {

TEST_CASE("token_count whitespace and approx_bpe") {
  CHECK(token_count("a b  c", TokenizerMode::Whitespace) == 3);
  CHECK(token_count("", TokenizerMode::Whitespace) == 0);
  CHECK(token_count("   ", TokenizerMode::Whitespace) == 0);
  CHECK(token_count("one", TokenizerMode::Whitespace) == 1);
  CHECK(token_count(std::string(400, 'x'), TokenizerMode::ApproxBpe) == 100);
  CHECK(token_count("abcde", TokenizerMode::ApproxBpe) == 2);  // ceil(5/4)
  CHECK(token_count("", TokenizerMode::ApproxBpe) == 0);
}

TEST_CASE("setting names round-trip") {
  for (const EncodingSetting setting : all_settings()) {
    CHECK(setting_from_string(setting_to_string(setting)) == setting);
  }
  CHECK_THROWS_AS(setting_from_string("bogus"), UserError);
}

TEST_CASE("text-only encoding equals the node text verbatim") {
  TempDir dir;
  const auto graph = star_graph(dir);
  EncodeOptions options;
  const auto encoding = encode_node(graph, "x", EncodingSetting::TextOnly, options);
  CHECK(encoding.text == "center node studies graph learning");
  CHECK(encoding.token_count == 5);
  CHECK(encoding.node == "x");
}

TEST_CASE("labels line renders in neighbor order with duplicates") {
  TempDir dir;
  const auto graph = star_graph(dir);
  EncodeOptions options;
  const auto encoding = encode_node(graph, "x", EncodingSetting::TextLabels, options);
  CHECK(encoding.text ==
        "center node studies graph learning\nNeighbor labels: A, B");
}

TEST_CASE("isolated node renders none for labels and keyphrases") {
  TempDir dir;
  const auto graph = star_graph(dir);
  EncodeOptions options;
  HashBagEmbedder embedder(64);
  const auto encoding =
      encode_node(graph, "z", EncodingSetting::TextLabelsKeyphrases, options, &embedder);
  CHECK(encoding.text ==
        "isolated node text\nNeighbor labels: none\nNeighbor keyphrases: none");
}

TEST_CASE("keyphrase encoding joins phrases with semicolons") {
  const std::string rendered = render_encoding(
      "node text", EncodingSetting::TextLabelsKeyphrases, {"A", "A", "B"},
      {"packet routing", "network"}, "");
  CHECK(rendered ==
        "node text\nNeighbor labels: A, A, B\nNeighbor keyphrases: packet routing; network");
}

TEST_CASE("summary encoding renders the summary line") {
  const std::string rendered = render_encoding("node text", EncodingSetting::TextLabelsSummary,
                                               {"A"}, {}, "a short summary");
  CHECK(rendered == "node text\nNeighbor labels: A\nNeighbor summary: a short summary");
}

TEST_CASE("neighbor_keyphrases concatenates in neighbor order; isolated -> empty") {
  TempDir dir;
  const auto graph = star_graph(dir);
  HashBagEmbedder embedder(128);
  KpeConfig config;
  CHECK(neighbor_keyphrases(graph, "z", config, embedder).empty());

  const auto phrases = neighbor_keyphrases(graph, "x", config, embedder);
  CHECK(!phrases.empty());
  CHECK(phrases.size() <= static_cast<size_t>(config.zeta));
}

TEST_CASE("two neighbors with identical text match one neighbor after dedup") {
  // texts end in a stopword, so with n <= 2 no boundary bigram survives
  TempDir dir;
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"a","text":"","label":"A","split":"train"})"
             "\n"
             R"({"id":"n1","text":"graph learning methods in","label":"A","split":"train"})"
             "\n"
             R"({"id":"n2","text":"graph learning methods in","label":"A","split":"train"})"
             "\n"
             R"({"id":"b","text":"","label":"A","split":"train"})"
             "\n");
  write_file(dir.path / "edges.txt", "a,n1\na,n2\nb,n1\n");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  HashBagEmbedder embedder(128);
  KpeConfig config;
  config.ngram_lengths = {1, 2};
  CHECK(neighbor_keyphrases(graph, "a", config, embedder) ==
        neighbor_keyphrases(graph, "b", config, embedder));
}

TEST_CASE("neighbor_summary makes one scripted call and truncates") {
  TempDir dir;
  const auto graph = star_graph(dir);
  ScriptedChat chat(true);
  const std::string prompt =
      std::string(kSummaryInstruction) +
      "\n\nneighbor text about neural networks neighbor text about routing networks";
  chat.add_exact(prompt, "Both neighbors discuss networks,\none neural and one routing.");

  const std::string summary = neighbor_summary(graph, "x", chat, 64);
  CHECK(summary == "Both neighbors discuss networks, one neural and one routing.");
  CHECK(chat.calls() == 1);

  const std::string truncated = neighbor_summary(graph, "x", chat, 3);
  CHECK(token_count(truncated, TokenizerMode::Whitespace) == 3);
}

TEST_CASE("neighbor_summary errors on an isolated node") {
  TempDir dir;
  const auto graph = star_graph(dir);
  ScriptedChat chat(true);
  CHECK_THROWS_WITH_AS(neighbor_summary(graph, "z", chat, 64),
                       doctest::Contains("no neighbors"), UserError);
}

TEST_CASE("node text is whitespace-normalized and budget-truncated") {
  TempDir dir;
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"a","text":"line one\nline two   spaced words here","label":"A","split":"train"})"
             "\n");
  write_file(dir.path / "edges.txt", "");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  EncodeOptions options;
  options.text_budget_tokens = 4;
  const auto encoding = encode_node(graph, "a", EncodingSetting::TextOnly, options);
  CHECK(encoding.text == "line one line two");
}

TEST_CASE("parse_encoding inverts render_encoding") {
  const std::vector<std::string> labels = {"case based", "theory"};
  const std::vector<std::string> keyphrases = {"packet routing", "reinforcement learning"};
  const std::string rendered = render_encoding("some node text", EncodingSetting::TextLabelsKeyphrases,
                                               labels, keyphrases, "");
  const ParsedEncoding parsed = parse_encoding(rendered);
  CHECK(parsed.text == "some node text");
  CHECK(parsed.labels == labels);
  CHECK(parsed.keyphrases == keyphrases);
  CHECK(!parsed.summary.has_value());

  const std::string with_summary = render_encoding("t", EncodingSetting::TextLabelsSummary, {},
                                                   {}, "sum text");
  const ParsedEncoding parsed_summary = parse_encoding(with_summary);
  CHECK(parsed_summary.labels.empty());
  CHECK(parsed_summary.summary == std::string("sum text"));
}

TEST_CASE("token_ratio_report computes ratios, histogram, and skips") {
  TempDir dir;
  // ring of 4 nodes: every node has 2 neighbors; plus one isolated node
  std::string nodes;
  for (int i = 0; i < 4; ++i) {
    nodes += R"({"id":"r)" + std::to_string(i) +
             R"(","text":"alpha beta gamma delta epsilon","label":"A","split":"train"})" + "\n";
  }
  nodes += R"({"id":"iso","text":"isolated","label":"A","split":"train"})"
           "\n";
  write_file(dir.path / "nodes.jsonl", nodes);
  write_file(dir.path / "edges.txt", "r0,r1\nr1,r2\nr2,r3\nr3,r0\n");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  ScriptedChat chat(false,
                    "twelve token summary padded with filler words one two three four five");
  HashBagEmbedder embedder(64);
  EncodeOptions options;
  options.kpe.ngram_lengths = {1, 2};

  const std::vector<NodeId> all = {"iso", "r0", "r1", "r2", "r3"};
  const auto report = token_ratio_report(graph, all, options, embedder, chat);
  CHECK(report.skipped == 1);
  CHECK(report.ratios.size() == 4);
  CHECK(report.mean > 0.0);
  CHECK(report.median > 0.0);
  int histogram_total = 0;
  for (int count : report.histogram) histogram_total += count;
  CHECK(histogram_total == 4);
  CHECK(report.histogram.size() == 21);

  CHECK_THROWS_AS(token_ratio_report(graph, {}, options, embedder, chat), UserError);
}

TEST_CASE("summary/keyphrase aggregate token ordering on a small corpus") {
  // directional analogue of the cost claim: long scripted summaries vs
  // phrase lists, compared via the report means
  TempDir dir;
  std::string nodes;
  for (int i = 0; i < 6; ++i) {
    nodes += R"({"id":"n)" + std::to_string(i) +
             R"(","text":"statistical machine translation models alignment decoding evaluation corpora","label":"A","split":"train"})" +
             "\n";
  }
  write_file(dir.path / "nodes.jsonl", nodes);
  std::string edges;
  for (int i = 0; i < 6; ++i) edges += "n" + std::to_string(i) + ",n" + std::to_string((i + 1) % 6) + "\n";
  write_file(dir.path / "edges.txt", edges);
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  ScriptedChat chat(false,
                    "this summary paragraph spends a generous number of tokens restating what "
                    "the neighbors said about statistical machine translation models and their "
                    "alignment decoding and evaluation against reference corpora");
  HashBagEmbedder embedder(64);
  EncodeOptions options;

  std::vector<NodeId> ids;
  for (int i = 0; i < 6; ++i) ids.push_back("n" + std::to_string(i));
  const auto report = token_ratio_report(graph, ids, options, embedder, chat);
  CHECK(report.mean > 1.0);
}

}  // TEST_SUITE

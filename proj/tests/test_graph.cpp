#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "graphit/graph.hpp"

using namespace graphit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("graphit_test_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path);
  file << content;
}

TextAttributedGraph tiny_graph(const TempDir& dir, const std::string& edges) {
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"a","text":"alpha text","label":"A","split":"train"})"
             "\n"
             R"({"id":"b","text":"beta text","label":"A","split":"val"})"
             "\n"
             R"({"id":"c","text":"gamma text","label":"B","split":"test"})"
             "\n");
  write_file(dir.path / "edges.txt", edges);
  return TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("load builds symmetric deduplicated adjacency") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "a,b\nb,a\n");
  CHECK(graph.node_count() == 3);
  CHECK(graph.neighbors("a") == std::vector<NodeId>{"b"});
  CHECK(graph.neighbors("b") == std::vector<NodeId>{"a"});
  CHECK(graph.neighbors("c").empty());
  CHECK(graph.edge_count() == 1);
}

TEST_CASE("self-loops are dropped") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "a,a\n");
  CHECK(graph.neighbors("a").empty());
}

TEST_CASE("edge referencing unknown node names it") {
  TempDir dir;
  CHECK_THROWS_WITH_AS(tiny_graph(dir, "a,z\n"),
                       doctest::Contains("unknown node \"z\""), UserError);
}

TEST_CASE("duplicate node id rejected") {
  TempDir dir;
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"a","text":"x","label":"A","split":"train"})"
             "\n"
             R"({"id":"a","text":"y","label":"A","split":"train"})"
             "\n");
  write_file(dir.path / "edges.txt", "");
  CHECK_THROWS_WITH_AS(
      TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt"),
      doctest::Contains("duplicate node id"), UserError);
}

TEST_CASE("malformed node line reports the line number") {
  TempDir dir;
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"a","text":"x","label":"A","split":"train"})"
             "\n"
             "not json\n");
  write_file(dir.path / "edges.txt", "");
  CHECK_THROWS_WITH_AS(
      TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt"),
      doctest::Contains(":2"), UserError);
}

TEST_CASE("train node without label rejected") {
  TempDir dir;
  write_file(dir.path / "nodes.jsonl", R"({"id":"a","text":"x","split":"train"})"
                                       "\n");
  write_file(dir.path / "edges.txt", "");
  CHECK_THROWS_WITH_AS(
      TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt"),
      doctest::Contains("no label"), UserError);
}

TEST_CASE("edge comments and blank lines are allowed") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "# header\n\na,b # inline\n");
  CHECK(graph.neighbors("a") == std::vector<NodeId>{"b"});
}

TEST_CASE("neighbors are ordered ascending and exclude the query node") {
  TempDir dir;
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"m","text":"m","label":"A","split":"train"})"
             "\n"
             R"({"id":"c","text":"c","label":"A","split":"train"})"
             "\n"
             R"({"id":"b","text":"b","label":"B","split":"train"})"
             "\n");
  write_file(dir.path / "edges.txt", "m,c\nm,b\n");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");
  CHECK(graph.neighbors("m") == std::vector<NodeId>{"b", "c"});
}

TEST_CASE("neighbors of unknown node is an error") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "");
  CHECK_THROWS_AS(graph.neighbors("zz"), UserError);
}

TEST_CASE("symmetry property over a random-ish graph") {
  TempDir dir;
  std::string nodes;
  for (int i = 0; i < 12; ++i) {
    nodes += R"({"id":"n)" + std::to_string(i) + R"(","text":"t","label":"A","split":"train"})" +
             "\n";
  }
  std::string edges;
  for (int i = 0; i < 12; ++i) {
    edges += "n" + std::to_string(i) + ",n" + std::to_string((i * 5 + 3) % 12) + "\n";
  }
  write_file(dir.path / "nodes.jsonl", nodes);
  write_file(dir.path / "edges.txt", edges);
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");
  for (int i = 0; i < 12; ++i) {
    const NodeId id = "n" + std::to_string(i);
    for (const NodeId& neighbor : graph.neighbors(id)) {
      CHECK(neighbor != id);
      const auto back = graph.neighbors(neighbor);
      CHECK(std::find(back.begin(), back.end(), id) != back.end());
    }
  }
}

TEST_CASE("neighbor_labels policies") {
  TempDir dir;
  write_file(dir.path / "nodes.jsonl",
             R"({"id":"x","text":"x","label":"A","split":"train"})"
             "\n"
             R"({"id":"p","text":"p","label":"A","split":"train"})"
             "\n"
             R"({"id":"q","text":"q","label":"A","split":"val"})"
             "\n"
             R"({"id":"r","text":"r","label":"B","split":"test"})"
             "\n"
             R"({"id":"u","text":"u","split":"test"})"
             "\n"
             R"({"id":"w","text":"w","split":"test"})"
             "\n");
  write_file(dir.path / "edges.txt", "x,p\nx,q\nx,r\nx,u\nw,r\nw,u\n");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  CHECK(graph.neighbor_labels("x", LabelPolicy::All) ==
        std::vector<std::string>{"A", "A", "B"});
  CHECK(graph.neighbor_labels("x", LabelPolicy::NonTestOnly) ==
        std::vector<std::string>{"A", "A"});
  // w's neighbors r and u are both in the test split
  CHECK(graph.neighbor_labels("w", LabelPolicy::NonTestOnly).empty());
  CHECK(graph.neighbor_labels("w", LabelPolicy::All) == std::vector<std::string>{"B"});
}

TEST_CASE("duplicate labels preserved in neighbor order") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "c,a\nc,b\n");
  // c's neighbors are a, b (both label A)
  CHECK(graph.neighbor_labels("c", LabelPolicy::All) == std::vector<std::string>{"A", "A"});
}

TEST_CASE("sample_per_class is deterministic, clamps, and warns") {
  TempDir dir;
  std::string nodes;
  for (int i = 0; i < 9; ++i) {
    nodes += R"({"id":"a)" + std::to_string(i) + R"(","text":"t","label":"A","split":"train"})" +
             "\n";
  }
  nodes += R"({"id":"b0","text":"t","label":"B","split":"train"})"
           "\n";
  write_file(dir.path / "nodes.jsonl", nodes);
  write_file(dir.path / "edges.txt", "");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  std::vector<std::string> warnings;
  const auto first = graph.sample_per_class(Split::Train, 3, 7, &warnings);
  const auto second = graph.sample_per_class(Split::Train, 3, 7);
  CHECK(first == second);
  CHECK(first.size() == 4);  // 3 of A, 1 of B (clamped)
  CHECK(warnings.size() == 1);
  CHECK(warnings[0].find("\"B\"") != std::string::npos);

  const auto other_seed = graph.sample_per_class(Split::Train, 3, 8);
  CHECK(other_seed.size() == 4);

  CHECK(graph.sample_per_class(Split::Train, 0, 7).empty());
  CHECK_THROWS_AS(graph.sample_per_class(Split::Val, 1, 7), UserError);
}

TEST_CASE("sample_test determinism and clamping") {
  TempDir dir;
  std::string nodes;
  for (int i = 0; i < 20; ++i) {
    nodes += R"({"id":"t)" + std::to_string(i) + R"(","text":"t","label":"A","split":"test"})" +
             "\n";
  }
  write_file(dir.path / "nodes.jsonl", nodes);
  write_file(dir.path / "edges.txt", "");
  const auto graph = TextAttributedGraph::load(dir.path / "nodes.jsonl", dir.path / "edges.txt");

  CHECK(graph.sample_test(5, 1) == graph.sample_test(5, 1));
  CHECK(graph.sample_test(5, 1).size() == 5);
  CHECK(graph.sample_test(5, 1) != graph.sample_test(5, 2));

  std::vector<std::string> warnings;
  const auto all = graph.sample_test(100, 1, &warnings);
  CHECK(all.size() == 20);
  CHECK(warnings.size() == 1);

  // without replacement
  std::set<NodeId> unique(all.begin(), all.end());
  CHECK(unique.size() == all.size());
}

TEST_CASE("save then load round-trips to identical canonical bytes") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "b,a\na,c\n");
  graph.save(dir.path / "nodes2.jsonl", dir.path / "edges2.txt");
  const auto reloaded =
      TextAttributedGraph::load(dir.path / "nodes2.jsonl", dir.path / "edges2.txt");
  reloaded.save(dir.path / "nodes3.jsonl", dir.path / "edges3.txt");

  const auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir.path / "nodes2.jsonl") == slurp(dir.path / "nodes3.jsonl"));
  CHECK(slurp(dir.path / "edges2.txt") == slurp(dir.path / "edges3.txt"));
  CHECK(slurp(dir.path / "edges2.txt") == "a,b\na,c\n");
}

TEST_CASE("label names are sorted and indexed consistently") {
  TempDir dir;
  const auto graph = tiny_graph(dir, "");
  CHECK(graph.label_names() == std::vector<std::string>{"A", "B"});
  CHECK(graph.label_name(*graph.node("c").label) == "B");
}

}  // TEST_SUITE

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "graphit/util.hpp"

namespace graphit {

// Node identifiers are opaque strings; maps keyed on them give the
// ascending-id ordering the whole pipeline relies on.
using NodeId = std::string;

enum class Split { Train, Val, Test };

Split split_from_string(std::string_view name);
std::string_view split_to_string(Split split);

// Which neighbors may contribute their label to an encoding. NonTestOnly is
// the default: labels of test-split neighbors are withheld to avoid leakage.
enum class LabelPolicy { NonTestOnly, All };

struct NodeRecord {
  std::string text;
  std::optional<int> label;  // index into label_names()
  Split split = Split::Train;
};

// Immutable text-attributed graph: undirected, no self-loops, every node in
// exactly one split. Construct via load() and treat as read-only afterwards;
// concurrent reads are safe.
class TextAttributedGraph {
 public:
  // nodes_path: line-delimited JSON objects {id, text, label?, split}.
  // edges_path: one "src,dst" per line, '#' comments allowed.
  // Duplicate edges and self-loops are dropped; an edge naming an unknown
  // node, a duplicate node id, or a train/val node without a label is an
  // error reported with its source location.
  static TextAttributedGraph load(const std::filesystem::path& nodes_path,
                                  const std::filesystem::path& edges_path);

  // Convenience for the {dir}/nodes.jsonl + {dir}/edges.txt layout.
  static TextAttributedGraph load_dir(const std::filesystem::path& dir);

  // Writes the canonical form: nodes sorted by id, one undirected edge per
  // line as "a,b" with a < b, sorted. load(save(load(x))) is a fixed point.
  void save(const std::filesystem::path& nodes_path,
            const std::filesystem::path& edges_path) const;

  bool has_node(const NodeId& id) const;
  const NodeRecord& node(const NodeId& id) const;

  // 1-hop neighbors in ascending id order; never contains `id` itself.
  std::vector<NodeId> neighbors(const NodeId& id) const;

  // One entry per neighbor with a usable label under the policy, in neighbor
  // order. Duplicates are preserved: multiplicity is signal.
  std::vector<std::string> neighbor_labels(const NodeId& id, LabelPolicy policy) const;

  // Per-class sample from a split: min(k, available) nodes per class, grouped
  // in label order, deterministic under the seed. Classes short of k trigger
  // a warning instead of failing.
  std::vector<NodeId> sample_per_class(Split split, int k, uint64_t seed,
                                       std::vector<std::string>* warnings = nullptr) const;

  // Uniform sample without replacement from the test split.
  std::vector<NodeId> sample_test(int n, uint64_t seed,
                                  std::vector<std::string>* warnings = nullptr) const;

  std::vector<NodeId> nodes_in_split(Split split) const;

  const std::vector<std::string>& label_names() const { return label_names_; }
  const std::string& label_name(int index) const;

  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const;

  const std::map<NodeId, NodeRecord>& nodes() const { return nodes_; }

 private:
  std::map<NodeId, NodeRecord> nodes_;
  std::map<NodeId, std::set<NodeId>> adjacency_;
  std::vector<std::string> label_names_;
};

}  // namespace graphit

#include "graphit/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace graphit {

namespace fs = std::filesystem;
using nlohmann::json;

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw UserError("unknown split \"" + std::string(name) + "\" (expected train|val|test)");
}

std::string_view split_to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

namespace {

struct RawNode {
  std::string text;
  std::optional<std::string> label;
  Split split;
};

std::string location(const fs::path& path, int line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

TextAttributedGraph TextAttributedGraph::load(const fs::path& nodes_path,
                                              const fs::path& edges_path) {
  std::ifstream nodes_file(nodes_path);
  if (!nodes_file) throw UserError("cannot open nodes file " + nodes_path.string());

  std::map<NodeId, RawNode> raw;
  std::string line;
  int line_no = 0;
  while (std::getline(nodes_file, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw UserError(location(nodes_path, line_no) + ": malformed JSON: " + e.what());
    }
    if (!record.is_object()) {
      throw UserError(location(nodes_path, line_no) + ": expected a JSON object");
    }
    if (!record.contains("id") || !record["id"].is_string()) {
      throw UserError(location(nodes_path, line_no) + ": missing string field \"id\"");
    }
    const NodeId id = record["id"].get<std::string>();
    if (id.empty()) throw UserError(location(nodes_path, line_no) + ": empty node id");
    if (!record.contains("text") || !record["text"].is_string()) {
      throw UserError(location(nodes_path, line_no) + ": node \"" + id +
                      "\" missing string field \"text\"");
    }
    if (!record.contains("split") || !record["split"].is_string()) {
      throw UserError(location(nodes_path, line_no) + ": node \"" + id +
                      "\" missing string field \"split\"");
    }
    RawNode node;
    node.text = record["text"].get<std::string>();
    node.split = split_from_string(record["split"].get<std::string>());
    if (record.contains("label")) {
      if (!record["label"].is_string()) {
        throw UserError(location(nodes_path, line_no) + ": node \"" + id +
                        "\" field \"label\" must be a string");
      }
      node.label = record["label"].get<std::string>();
    }
    if (!node.label.has_value() && node.split != Split::Test) {
      throw UserError(location(nodes_path, line_no) + ": node \"" + id + "\" is in the " +
                      std::string(split_to_string(node.split)) + " split but has no label");
    }
    if (!raw.emplace(id, std::move(node)).second) {
      throw UserError(location(nodes_path, line_no) + ": duplicate node id \"" + id + "\"");
    }
  }

  TextAttributedGraph graph;
  std::set<std::string> label_set;
  for (const auto& [id, node] : raw) {
    if (node.label) label_set.insert(*node.label);
  }
  graph.label_names_.assign(label_set.begin(), label_set.end());
  std::map<std::string, int> label_index;
  for (size_t i = 0; i < graph.label_names_.size(); ++i) {
    label_index[graph.label_names_[i]] = static_cast<int>(i);
  }
  for (auto& [id, node] : raw) {
    NodeRecord record;
    record.text = node.text;
    record.split = node.split;
    if (node.label) record.label = label_index.at(*node.label);
    graph.nodes_.emplace(id, std::move(record));
  }

  std::ifstream edges_file(edges_path);
  if (!edges_file) throw UserError("cannot open edges file " + edges_path.string());
  line_no = 0;
  while (std::getline(edges_file, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const size_t comma = content.find(',');
    if (comma == std::string::npos) {
      throw UserError(location(edges_path, line_no) + ": expected \"src,dst\"");
    }
    const NodeId src = trim(content.substr(0, comma));
    const NodeId dst = trim(content.substr(comma + 1));
    if (src.empty() || dst.empty()) {
      throw UserError(location(edges_path, line_no) + ": expected \"src,dst\"");
    }
    for (const NodeId* endpoint : {&src, &dst}) {
      if (!graph.nodes_.count(*endpoint)) {
        throw UserError(location(edges_path, line_no) + ": edge references unknown node \"" +
                        *endpoint + "\"");
      }
    }
    if (src == dst) continue;  // self-loops dropped
    graph.adjacency_[src].insert(dst);
    graph.adjacency_[dst].insert(src);
  }
  return graph;
}

TextAttributedGraph TextAttributedGraph::load_dir(const fs::path& dir) {
  return load(dir / "nodes.jsonl", dir / "edges.txt");
}

void TextAttributedGraph::save(const fs::path& nodes_path, const fs::path& edges_path) const {
  std::ofstream nodes_file(nodes_path);
  if (!nodes_file) throw UserError("cannot write nodes file " + nodes_path.string());
  for (const auto& [id, record] : nodes_) {
    json obj;
    obj["id"] = id;
    if (record.label) obj["label"] = label_names_.at(static_cast<size_t>(*record.label));
    obj["split"] = std::string(split_to_string(record.split));
    obj["text"] = record.text;
    nodes_file << obj.dump() << "\n";
  }

  std::ofstream edges_file(edges_path);
  if (!edges_file) throw UserError("cannot write edges file " + edges_path.string());
  for (const auto& [id, adjacent] : adjacency_) {
    for (const NodeId& other : adjacent) {
      if (id < other) edges_file << id << "," << other << "\n";
    }
  }
}

bool TextAttributedGraph::has_node(const NodeId& id) const { return nodes_.count(id) > 0; }

const NodeRecord& TextAttributedGraph::node(const NodeId& id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw UserError("unknown node id \"" + id + "\"");
  return it->second;
}

std::vector<NodeId> TextAttributedGraph::neighbors(const NodeId& id) const {
  node(id);  // existence check
  const auto it = adjacency_.find(id);
  if (it == adjacency_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<std::string> TextAttributedGraph::neighbor_labels(const NodeId& id,
                                                              LabelPolicy policy) const {
  std::vector<std::string> labels;
  for (const NodeId& neighbor : neighbors(id)) {
    const NodeRecord& record = nodes_.at(neighbor);
    if (!record.label) continue;
    if (policy == LabelPolicy::NonTestOnly && record.split == Split::Test) continue;
    labels.push_back(label_names_.at(static_cast<size_t>(*record.label)));
  }
  return labels;
}

std::vector<NodeId> TextAttributedGraph::nodes_in_split(Split split) const {
  std::vector<NodeId> ids;
  for (const auto& [id, record] : nodes_) {
    if (record.split == split) ids.push_back(id);
  }
  return ids;
}

std::vector<NodeId> TextAttributedGraph::sample_per_class(
    Split split, int k, uint64_t seed, std::vector<std::string>* warnings) const {
  const std::vector<NodeId> pool = nodes_in_split(split);
  if (pool.empty()) {
    throw UserError("split " + std::string(split_to_string(split)) + " is empty");
  }
  std::vector<NodeId> out;
  if (k <= 0) return out;

  std::vector<std::vector<NodeId>> by_class(label_names_.size());
  for (const NodeId& id : pool) {
    const NodeRecord& record = nodes_.at(id);
    if (record.label) by_class[static_cast<size_t>(*record.label)].push_back(id);
  }
  for (size_t cls = 0; cls < by_class.size(); ++cls) {
    auto& members = by_class[cls];  // already ascending (map iteration order)
    Rng rng(derive_seed(seed, cls));
    deterministic_shuffle(members, rng);
    const size_t take = std::min<size_t>(static_cast<size_t>(k), members.size());
    if (take < static_cast<size_t>(k)) {
      const std::string message = "class \"" + label_names_[cls] + "\" has only " +
                                  std::to_string(members.size()) + " of " + std::to_string(k) +
                                  " requested nodes in split " +
                                  std::string(split_to_string(split));
      if (warnings) warnings->push_back(message);
      logging::warn(message);
    }
    out.insert(out.end(), members.begin(), members.begin() + static_cast<long>(take));
  }
  return out;
}

std::vector<NodeId> TextAttributedGraph::sample_test(int n, uint64_t seed,
                                                     std::vector<std::string>* warnings) const {
  std::vector<NodeId> pool = nodes_in_split(Split::Test);
  if (pool.empty()) throw UserError("split test is empty");
  if (n <= 0) return {};
  Rng rng(seed);
  deterministic_shuffle(pool, rng);
  if (static_cast<size_t>(n) >= pool.size()) {
    if (static_cast<size_t>(n) > pool.size()) {
      const std::string message = "requested " + std::to_string(n) + " test nodes but only " +
                                  std::to_string(pool.size()) + " exist; using all";
      if (warnings) warnings->push_back(message);
      logging::warn(message);
    }
    return pool;
  }
  pool.resize(static_cast<size_t>(n));
  return pool;
}

const std::string& TextAttributedGraph::label_name(int index) const {
  if (index < 0 || static_cast<size_t>(index) >= label_names_.size()) {
    throw Error("label index out of range: " + std::to_string(index));
  }
  return label_names_[static_cast<size_t>(index)];
}

size_t TextAttributedGraph::edge_count() const {
  size_t total = 0;
  for (const auto& [id, adjacent] : adjacency_) total += adjacent.size();
  return total / 2;
}

}  // namespace graphit

#include "lvx/routing.hpp"

#include <algorithm>
#include <fstream>

#include "lvx/errors.hpp"

namespace lvx {

ExplanationTree explain(const EmbeddingVector& q, const std::string& predicted,
                        const TreeMap& trees, const EmbeddingStore& store,
                        const RoutingConfig& route, const DistanceConfig& dist) {
  if (route.k == 0) throw ValidationError("k", "must be at least 1");
  const auto it = trees.find(predicted);
  if (it == trees.end())
    throw DataError("sample '" + q.id + "': no tree for predicted category '" + predicted + "'");
  const AttributeTree& tree = it->second;

  auto ranked = node_distances(q, tree, store, dist);
  if (route.k > ranked.size())
    throw DataError("k = " + std::to_string(route.k) + " exceeds the " +
                    std::to_string(ranked.size()) + " supported nodes of tree '" + predicted +
                    "'");
  // node_distances is in preorder, so a stable sort breaks ties by preorder.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.distance < b.distance; });
  ranked.resize(route.k);

  std::vector<NodeId> chosen;
  for (const auto& r : ranked) chosen.push_back(r.node);
  ExplanationTree out = merge_paths(tree, chosen);
  out.source_sample = q.id;
  for (const auto& r : ranked) out.selected_distances.push_back(r.distance);
  return out;
}

ExplanationTree explain_multilabel(const EmbeddingVector& q,
                                   const MultiLabelPrediction& prediction,
                                   std::span<const AttributeTree> finding_trees,
                                   const EmbeddingStore& store, const RoutingConfig& route,
                                   const DistanceConfig& dist) {
  if (prediction.finding_flags.size() != finding_trees.size())
    throw ValidationError("finding_flags", "length " +
                                               std::to_string(prediction.finding_flags.size()) +
                                               " does not match " +
                                               std::to_string(finding_trees.size()) + " findings");

  NodeSpec root{std::string(kNoFindingsLabel), NodeKind::Root, {}, {}};
  ExplanationTree out{AttributeTree::build(root), q.id, {}, {0}, {}};
  std::vector<ExplanationTree> parts;
  for (std::size_t i = 0; i < finding_trees.size(); ++i) {
    const int flag = prediction.finding_flags[i];
    if (flag != 0 && flag != 1)
      throw ValidationError("finding_flags[" + std::to_string(i) + "]", "must be 0 or 1");
    if (flag == 0) continue;
    TreeMap single{{finding_trees[i].category(), finding_trees[i]}};
    parts.push_back(explain(q, finding_trees[i].category(), single, store, route, dist));
  }
  if (parts.empty()) return out;

  root.label = std::string(kHasFindingsLabel);
  for (const auto& part : parts) {
    NodeSpec child = part.tree.to_spec();
    child.kind = NodeKind::Leaf;
    root.children.push_back(std::move(child));
  }
  out.tree = AttributeTree::build(root);

  // Each part occupies a contiguous preorder block after the new root.
  NodeId offset = 1;
  for (const auto& part : parts) {
    for (NodeId id : part.selected_nodes) out.selected_nodes.push_back(offset + id);
    out.selected_distances.insert(out.selected_distances.end(), part.selected_distances.begin(),
                                  part.selected_distances.end());
    out.source_ids.insert(out.source_ids.end(), part.source_ids.begin(), part.source_ids.end());
    offset += part.tree.size();
  }
  return out;
}

Json record_to_json(const ExplanationRecord& record) {
  const auto& e = record.explanation;
  Json out = Json::object();
  out["sample_id"] = record.sample_id;
  out["predicted"] = record.predicted;
  out["method"] = record.method;
  out["explanation"] = tree_to_json(e.tree);
  out["selected_nodes"] = e.selected_nodes;
  Json distances = Json::array();
  for (std::size_t i = 0; i < e.selected_distances.size() && i < e.selected_nodes.size(); ++i)
    distances.push_back(Json{{"node", e.tree.node(e.selected_nodes[i]).label},
                             {"distance", e.selected_distances[i]}});
  out["node_distances"] = std::move(distances);
  return out;
}

ExplanationRecord record_from_json(const Json& value, const std::string& where) {
  if (!value.is_object()) throw ValidationError(where, "expected an object");
  for (const char* field : {"sample_id", "predicted", "explanation"})
    if (!value.contains(field)) throw ValidationError(where, std::string("missing '") + field + "'");

  ExplanationRecord record{value["sample_id"].get<std::string>(),
                           value["predicted"].get<std::string>(),
                           value.value("method", "lvx"),
                           ExplanationTree{tree_from_json(value["explanation"]), {}, {}, {}, {}}};
  auto& e = record.explanation;
  e.source_sample = record.sample_id;
  for (NodeId id = 0; id < e.tree.size(); ++id) e.source_ids.push_back(id);
  if (value.contains("selected_nodes")) {
    for (const auto& id : value["selected_nodes"]) {
      const auto node = id.get<NodeId>();
      if (!e.tree.contains(node))
        throw ValidationError(where + ".selected_nodes", "id " + std::to_string(node) +
                                                             " is outside the explanation");
      e.selected_nodes.push_back(node);
    }
  }
  if (value.contains("node_distances"))
    for (const auto& entry : value["node_distances"])
      e.selected_distances.push_back(entry.at("distance").get<double>());
  return record;
}

void write_explanations(const std::filesystem::path& path,
                        std::span<const ExplanationRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<ExplanationRecord> load_explanations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open explanation file " + path.string());
  std::vector<ExplanationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json value;
    try {
      value = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what(), e.byte);
    }
    try {
      records.push_back(record_from_json(value, where));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where, e.what());
    }
  }
  return records;
}

}  // namespace lvx

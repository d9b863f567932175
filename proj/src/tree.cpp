#include "lvx/tree.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <utility>

#include "lvx/errors.hpp"

namespace lvx {
namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 6> kKindNames{{
    {NodeKind::Root, "root"},
    {NodeKind::Concepts, "Concepts"},
    {NodeKind::Substances, "Substances"},
    {NodeKind::Attributes, "Attributes"},
    {NodeKind::Environments, "Environments"},
    {NodeKind::Leaf, "leaf"},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string child_path(const std::string& parent, std::size_t index) {
  return parent + ".children[" + std::to_string(index) + "]";
}

// Depth-first flattening of a validated spec into preorder arrays.
struct Flattener {
  std::vector<TreeNode>& nodes;
  std::vector<std::optional<NodeId>>& parents;
  std::vector<std::size_t>& depths;
  std::vector<NodeId>& ends;

  NodeId visit(const NodeSpec& spec, std::optional<NodeId> parent, std::size_t depth,
               const std::string& path) {
    const NodeId id = nodes.size();
    std::string label = trim(spec.label);
    if (label.empty()) throw ValidationError(path + ".name", "label is empty");
    if (depth == 0 && spec.kind != NodeKind::Root)
      throw ValidationError(path + ".kind", "root node must have kind 'root'");
    if (depth > 0 && spec.kind == NodeKind::Root)
      throw ValidationError(path + ".kind", "only the top node may have kind 'root'");

    nodes.push_back(TreeNode{id, std::move(label), spec.kind, {}, spec.support});
    parents.push_back(parent);
    depths.push_back(depth);
    ends.push_back(id);

    std::set<std::string, std::less<>> seen;
    for (std::size_t i = 0; i < spec.children.size(); ++i) {
      const std::string path_i = child_path(path, i);
      std::string child_label = trim(spec.children[i].label);
      if (!child_label.empty() && !seen.insert(child_label).second)
        throw ValidationError(path_i + ".name", "duplicate sibling label '" + child_label + "'");
      const NodeId child = visit(spec.children[i], id, depth + 1, path_i);
      nodes[id].children.push_back(child);
    }
    ends[id] = nodes.size();
    return id;
  }
};

NodeSpec spec_from_json(const Json& value, const std::string& path, bool is_root) {
  if (!value.is_object()) throw ValidationError(path, "expected an object");
  NodeSpec spec;

  const auto name = value.find("name");
  if (name == value.end()) throw ValidationError(path + ".name", "missing required field");
  if (!name->is_string()) throw ValidationError(path + ".name", "expected a string");
  spec.label = trim(name->get<std::string>());
  if (spec.label.empty()) throw ValidationError(path + ".name", "label is empty");

  spec.kind = is_root ? NodeKind::Root : NodeKind::Leaf;
  if (const auto kind = value.find("kind"); kind != value.end() && !kind->is_null()) {
    if (!kind->is_string()) throw ValidationError(path + ".kind", "expected a string");
    const auto parsed = parse_node_kind(kind->get<std::string>());
    if (!parsed)
      throw ValidationError(path + ".kind", "unknown kind '" + kind->get<std::string>() + "'");
    spec.kind = *parsed;
  }

  if (const auto support = value.find("support"); support != value.end() && !support->is_null()) {
    if (!support->is_array()) throw ValidationError(path + ".support", "expected an array");
    for (std::size_t i = 0; i < support->size(); ++i) {
      const auto& entry = (*support)[i];
      if (!entry.is_string())
        throw ValidationError(path + ".support[" + std::to_string(i) + "]", "expected a string");
      spec.support.push_back(entry.get<std::string>());
    }
  }

  if (const auto children = value.find("children");
      children != value.end() && !children->is_null()) {
    if (!children->is_array()) throw ValidationError(path + ".children", "expected an array");
    spec.children.reserve(children->size());
    for (std::size_t i = 0; i < children->size(); ++i)
      spec.children.push_back(spec_from_json((*children)[i], child_path(path, i), false));
  }
  return spec;
}

Json node_to_json(const AttributeTree& tree, NodeId id) {
  const TreeNode& node = tree.node(id);
  Json out = Json::object();
  out["name"] = node.label;
  out["kind"] = std::string(to_string(node.kind));
  if (!node.support.empty()) out["support"] = node.support;
  if (!node.children.empty()) {
    Json children = Json::array();
    for (NodeId child : node.children) children.push_back(node_to_json(tree, child));
    out["children"] = std::move(children);
  }
  return out;
}

NodeSpec filtered_spec(const AttributeTree& tree, NodeId id, const std::vector<char>& keep) {
  const TreeNode& node = tree.node(id);
  NodeSpec spec{node.label, node.kind, node.support, {}};
  for (NodeId child : node.children)
    if (keep[child]) spec.children.push_back(filtered_spec(tree, child, keep));
  return spec;
}

// Connected sets whose topmost node is `top`, each with at most `limit` nodes.
std::vector<std::vector<NodeId>> rooted_sets(const AttributeTree& tree, NodeId top,
                                             std::size_t limit) {
  std::vector<std::vector<NodeId>> acc{{top}};
  if (limit <= 1) return acc;
  for (NodeId child : tree.node(top).children) {
    std::vector<std::vector<NodeId>> next = acc;
    for (const auto& base : acc) {
      if (base.size() >= limit) continue;
      for (auto& extension : rooted_sets(tree, child, limit - base.size())) {
        auto merged = base;
        merged.insert(merged.end(), extension.begin(), extension.end());
        next.push_back(std::move(merged));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

std::string trim(std::string_view text) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return std::string(text);
}

std::string_view to_string(NodeKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "leaf";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  for (const auto& [kind, name] : kKindNames)
    if (iequals(text, name)) return kind;
  return std::nullopt;
}

AttributeTree AttributeTree::build(const NodeSpec& root, std::size_t version) {
  AttributeTree tree;
  tree.version_ = version;
  Flattener{tree.nodes_, tree.parents_, tree.depths_, tree.ends_}.visit(root, std::nullopt, 0, "$");
  return tree;
}

const TreeNode& AttributeTree::node(NodeId id) const {
  if (!contains(id))
    throw DataError("node id " + std::to_string(id) + " not in tree '" + category() + "'");
  return nodes_[id];
}

std::optional<NodeId> AttributeTree::parent(NodeId id) const {
  node(id);
  return parents_[id];
}

std::vector<NodeId> AttributeTree::path_from_root(NodeId id) const {
  std::vector<NodeId> path;
  for (std::optional<NodeId> cur = id; cur; cur = parent(*cur)) path.push_back(*cur);
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<NodeId> AttributeTree::find_child(NodeId parent, std::string_view label) const {
  for (NodeId child : node(parent).children)
    if (nodes_[child].label == label) return child;
  return std::nullopt;
}

std::optional<NodeId> AttributeTree::find(std::string_view label) const {
  for (const auto& n : nodes_)
    if (n.label == label) return n.id;
  return std::nullopt;
}

NodeSpec AttributeTree::to_spec(NodeId id) const {
  const TreeNode& n = node(id);
  NodeSpec spec{n.label, n.kind, n.support, {}};
  spec.children.reserve(n.children.size());
  for (NodeId child : n.children) spec.children.push_back(to_spec(child));
  return spec;
}

AttributeTree AttributeTree::with_version(std::size_t version) const {
  AttributeTree copy = *this;
  copy.version_ = version;
  return copy;
}

bool structurally_equal(const AttributeTree& a, const AttributeTree& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.label != y.label || x.kind != y.kind || x.children != y.children ||
        x.support != y.support)
      return false;
  }
  return true;
}

AttributeTree parse_tree(std::string_view json_text) {
  Json value;
  try {
    value = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed tree JSON: ") + e.what(), e.byte);
  }
  return tree_from_json(value);
}

AttributeTree tree_from_json(const Json& value) {
  return AttributeTree::build(spec_from_json(value, "$", true));
}

Json tree_to_json(const AttributeTree& tree) { return node_to_json(tree, tree.root_id()); }

std::string serialize_tree(const AttributeTree& tree, int indent) {
  return tree_to_json(tree).dump(indent);
}

ExplanationTree merge_paths(const AttributeTree& tree, std::span<const NodeId> node_ids) {
  std::vector<char> keep(tree.size(), 0);
  keep[tree.root_id()] = 1;
  for (NodeId id : node_ids) {
    if (!tree.contains(id))
      throw DataError("merge_paths: unknown node id " + std::to_string(id) + " in tree '" +
                      tree.category() + "'");
    for (NodeId on_path : tree.path_from_root(id)) keep[on_path] = 1;
  }

  ExplanationTree out{AttributeTree::build(filtered_spec(tree, tree.root_id(), keep),
                                           tree.version()),
                      {}, {}, {}, {}};
  std::vector<NodeId> new_id(tree.size(), 0);
  for (NodeId id = 0; id < tree.size(); ++id) {
    if (!keep[id]) continue;
    new_id[id] = out.source_ids.size();
    out.source_ids.push_back(id);
  }
  for (NodeId id : node_ids) {
    const NodeId mapped = new_id[id];
    if (std::find(out.selected_nodes.begin(), out.selected_nodes.end(), mapped) ==
        out.selected_nodes.end())
      out.selected_nodes.push_back(mapped);
  }
  return out;
}

std::vector<std::vector<NodeId>> enumerate_subtrees(const AttributeTree& tree,
                                                    std::size_t max_nodes) {
  std::vector<std::vector<NodeId>> all;
  if (max_nodes == 0) return all;
  for (NodeId top = 0; top < tree.size(); ++top) {
    for (auto& set : rooted_sets(tree, top, max_nodes)) {
      std::sort(set.begin(), set.end());
      all.push_back(std::move(set));
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return all;
}

}  // namespace lvx

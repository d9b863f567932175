#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lvx {

enum class NodeKind { Root, Concepts, Substances, Attributes, Environments, Leaf };

/// Canonical spelling: "root", "leaf", or the capitalized primary-branch name.
std::string_view to_string(NodeKind kind);

/// Case-insensitive inverse of `to_string`.
std::optional<NodeKind> parse_node_kind(std::string_view text);

using NodeId = std::size_t;

struct TreeNode {
  NodeId id = 0;
  std::string label;
  NodeKind kind = NodeKind::Leaf;
  std::vector<NodeId> children;
  /// Embedding ids grounding this attribute; empty when the node has no support set.
  std::vector<std::string> support;
};

/// Nested, mutable description of a tree. Trees are edited by round-tripping
/// through this form and rebuilding.
struct NodeSpec {
  std::string label;
  NodeKind kind = NodeKind::Leaf;
  std::vector<std::string> support;
  std::vector<NodeSpec> children;
};

/// Rooted, labeled, ordered tree of attributes for one category.
///
/// Immutable after construction. Node ids are preorder indices, so the root is
/// always 0 and the subtree of `v` occupies the id range `[v, subtree_end(v))`.
class AttributeTree {
 public:
  /// Validates `root` (non-empty trimmed labels, unique sibling labels, a single
  /// Root kind at the top) and numbers nodes in preorder. Throws ValidationError.
  static AttributeTree build(const NodeSpec& root, std::size_t version = 0);

  const std::string& category() const { return nodes_.front().label; }
  std::size_t version() const { return version_; }
  NodeId root_id() const { return 0; }
  std::size_t size() const { return nodes_.size(); }

  bool contains(NodeId id) const { return id < nodes_.size(); }
  /// Throws DataError for unknown ids.
  const TreeNode& node(NodeId id) const;
  std::span<const TreeNode> nodes() const { return nodes_; }

  std::optional<NodeId> parent(NodeId id) const;
  std::size_t depth(NodeId id) const { return depths_.at(id); }
  NodeId subtree_end(NodeId id) const { return ends_.at(id); }
  std::size_t subtree_size(NodeId id) const { return ends_.at(id) - id; }
  bool is_leaf(NodeId id) const { return node(id).children.empty(); }
  bool is_ancestor(NodeId ancestor, NodeId id) const {
    return ancestor < id && id < ends_.at(ancestor);
  }

  /// Root first, `id` last.
  std::vector<NodeId> path_from_root(NodeId id) const;
  std::optional<NodeId> find_child(NodeId parent, std::string_view label) const;
  /// First node in preorder carrying `label`.
  std::optional<NodeId> find(std::string_view label) const;

  NodeSpec to_spec(NodeId id = 0) const;
  AttributeTree with_version(std::size_t version) const;

  /// Same labels, kinds, child order and support lists. Ignores `version`.
  friend bool structurally_equal(const AttributeTree& a, const AttributeTree& b);

 private:
  AttributeTree() = default;

  std::vector<TreeNode> nodes_;
  std::vector<std::optional<NodeId>> parents_;
  std::vector<std::size_t> depths_;
  std::vector<NodeId> ends_;
  std::size_t version_ = 0;
};

/// Sample-specific explanation: the union of root paths to the selected nodes.
struct ExplanationTree {
  AttributeTree tree;
  std::string source_sample;
  /// Selected nodes as ids of `tree`, in selection order.
  std::vector<NodeId> selected_nodes;
  /// For each node of `tree`, the id it had in the tree it was cut from.
  std::vector<NodeId> source_ids;
  /// Point-to-set distance of each selected node, when selection was distance-based.
  std::vector<double> selected_distances;
};

using Json = nlohmann::ordered_json;

AttributeTree parse_tree(std::string_view json_text);
AttributeTree tree_from_json(const Json& value);
Json tree_to_json(const AttributeTree& tree);
/// Compact JSON by default; `indent >= 0` pretty-prints.
std::string serialize_tree(const AttributeTree& tree, int indent = -1);

/// Minimal subtree of `tree` containing the root and every id in `node_ids`.
/// Throws DataError naming the first unknown id.
ExplanationTree merge_paths(const AttributeTree& tree, std::span<const NodeId> node_ids);

/// Every connected node set with at most `max_nodes` members, each sorted by
/// id. Ordered by size, then lexicographically.
std::vector<std::vector<NodeId>> enumerate_subtrees(const AttributeTree& tree,
                                                    std::size_t max_nodes);

std::string trim(std::string_view text);

}  // namespace lvx

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvx/embedding.hpp"
#include "lvx/llm.hpp"
#include "lvx/tree.hpp"

namespace lvx {

using TreeMap = std::map<std::string, AttributeTree, std::less<>>;

struct RefinementConfig {
  std::size_t t_max = 5;
  /// Least-visited nodes removed per tree per iteration, on top of every zero-visit subtree.
  std::size_t prune_count = 1;
  /// Most-visited nodes expanded through the LLM per tree per iteration.
  std::size_t grow_count = 1;
  /// Support embeddings requested for each new node (advisory; the source decides).
  std::size_t k_support = 10;
  /// Rename attributes shared across categories through the contrast prompt.
  bool discriminate_common = true;
  std::string in_context_example;
};

/// A training embedding with its ground-truth category.
struct LabeledSample {
  EmbeddingVector embedding;
  std::string category;
};

struct NodeDistance {
  NodeId node = 0;
  double distance = 0.0;
};

struct Assignment {
  std::string sample_id;
  NodeId node = 0;
  double distance = 0.0;
};

/// Nearest-node assignments of one category's samples against one tree.
struct AssignmentTable {
  std::string category;
  /// Sorted by sample id, so the table does not depend on input order.
  std::vector<Assignment> assignments;
  /// Indexed by node id of the tree the table was computed against.
  std::vector<std::size_t> visits;

  std::size_t total() const;
  /// Visits of each node summed over its subtree.
  std::vector<std::size_t> subtree_visits(const AttributeTree& tree) const;
};

/// Point-to-set distances from `q` to every supported non-root node, in preorder.
std::vector<NodeDistance> node_distances(const EmbeddingVector& q, const AttributeTree& tree,
                                         const EmbeddingStore& store,
                                         const DistanceConfig& cfg);

/// Nearest supported non-root node; ties go to the smaller preorder id.
/// Throws DataError when no node of the tree has support.
NodeDistance assign_sample(const EmbeddingVector& q, const AttributeTree& tree,
                           const EmbeddingStore& store, const DistanceConfig& cfg);

AssignmentTable count_visits(std::span<const LabeledSample> samples, const AttributeTree& tree,
                             const EmbeddingStore& store, const DistanceConfig& cfg);

/// One table per tree (trees without samples get all-zero tables). Throws
/// DataError listing sample categories that have no tree.
std::map<std::string, AssignmentTable, std::less<>> count_visits(
    std::span<const LabeledSample> samples, const TreeMap& trees, const EmbeddingStore& store,
    const DistanceConfig& cfg);

/// Removes every subtree whose summed visits are zero, plus the `prune_count`
/// non-root nodes with the smallest subtree-summed visits (ties: smaller
/// subtree, then preorder), each with its descendants. A candidate already
/// removed as part of a zero-visit subtree uses up its share of the quota.
/// The root and the last supported node are never removed.
/// A table with no samples leaves the tree unchanged.
AttributeTree prune(const AttributeTree& tree, const AssignmentTable& table,
                    const RefinementConfig& cfg);

/// Growth inquiry for `node`, followed by the node's current subtree as JSON.
/// Throws ValidationError for the root, which only grows through initial generation.
std::string build_grow_prompt(const AttributeTree& tree, NodeId node, std::string_view class_name,
                              std::string_view in_context_example = {});

std::string build_discriminate_prompt(const AttributeTree& tree, NodeId node,
                                      std::string_view class_name,
                                      std::string_view other_class_name);

struct GrowOutcome {
  AttributeTree tree;
  /// Support embeddings fetched for the new nodes.
  std::vector<EmbeddingVector> new_supports;
  /// Human-readable reasons for growths that were skipped.
  std::vector<std::string> skipped;
};

/// Expands the `grow_count` most-visited non-root nodes with the children the LLM
/// proposes. Unparsable replies skip that node. Children duplicating an existing
/// sibling label are dropped. The result's version is one past the input's.
GrowOutcome grow(const AttributeTree& tree, const AssignmentTable& table, LlmClient& llm,
                 SupportSource& supports, const EmbeddingStore& store,
                 const RefinementConfig& cfg, std::size_t iteration);

struct RefineResult {
  TreeMap trees;
  /// Input store plus every support embedding fetched during the run.
  EmbeddingStore store;
  std::vector<std::string> log;
};

/// Initial tree T^(0) for `category` from one InitialAttributes inquiry keyed
/// (InitialAttributes, category, "", 0). The reply's root is renamed to the
/// category. Throws UnparsableResponse when the reply holds no JSON tree.
AttributeTree build_initial_tree(const std::string& category, LlmClient& llm,
                                 std::string_view in_context_example);

/// Runs `cfg.t_max` rounds of count, prune, grow and common-node discrimination.
RefineResult refine(const TreeMap& initial, std::span<const LabeledSample> train,
                    const EmbeddingStore& store, LlmClient& llm, SupportSource& supports,
                    const RefinementConfig& cfg, const DistanceConfig& dist);

}  // namespace lvx

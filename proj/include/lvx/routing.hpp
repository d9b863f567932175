#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lvx/embedding.hpp"
#include "lvx/refinement.hpp"
#include "lvx/tree.hpp"

namespace lvx {

struct RoutingConfig {
  /// Nodes selected per explanation.
  std::size_t k = 5;
};

/// Per-finding binary prediction of a multi-label model.
struct MultiLabelPrediction {
  std::vector<int> finding_flags;
};

inline constexpr std::string_view kNoFindingsLabel = "No Findings";
inline constexpr std::string_view kHasFindingsLabel = "has Findings";

/// Selects the `k` supported non-root nodes of the predicted category's tree
/// closest to `q` (ties by preorder) and merges their root paths.
/// `selected_nodes` and `selected_distances` are in ascending distance order.
ExplanationTree explain(const EmbeddingVector& q, const std::string& predicted,
                        const TreeMap& trees, const EmbeddingStore& store,
                        const RoutingConfig& route, const DistanceConfig& dist);

/// Multi-label composition: all-zero flags give the single node "No Findings";
/// otherwise a "has Findings" root whose children are the per-finding
/// explanations, in finding order. `finding_trees[i]` explains finding i.
ExplanationTree explain_multilabel(const EmbeddingVector& q,
                                   const MultiLabelPrediction& prediction,
                                   std::span<const AttributeTree> finding_trees,
                                   const EmbeddingStore& store, const RoutingConfig& route,
                                   const DistanceConfig& dist);

/// One line of a batch explanation file.
struct ExplanationRecord {
  std::string sample_id;
  std::string predicted;
  /// lvx, random, constant or subtree.
  std::string method = "lvx";
  ExplanationTree explanation;
};

Json record_to_json(const ExplanationRecord& record);
ExplanationRecord record_from_json(const Json& value, const std::string& where = "$");

void write_explanations(const std::filesystem::path& path,
                        std::span<const ExplanationRecord> records);
std::vector<ExplanationRecord> load_explanations(const std::filesystem::path& path);

}  // namespace lvx

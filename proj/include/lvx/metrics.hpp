#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvx/embedding.hpp"
#include "lvx/tree.hpp"

namespace lvx {

/// Bare ordered labeled tree in preorder (root = 0). May be empty, and unlike
/// AttributeTree it tolerates repeated sibling labels.
struct LabeledTree {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> children;

  static LabeledTree from(const AttributeTree& tree);
  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

struct MetricConfig {
  /// Decay applied per tree layer in the tree kernel, in (0, 1).
  double tk_lambda = 0.5;
  /// Largest tree size the brute-force oracles are asked to verify.
  std::size_t oracle_max_nodes = 6;

  void validate() const;
};

/// Unit-cost ordered tree edit distance (insert, delete, relabel), computed
/// with the Zhang-Shasha keyroot dynamic program. Labels compare exactly.
std::size_t ted(const LabeledTree& a, const LabeledTree& b);
std::size_t ted(const AttributeTree& a, const AttributeTree& b);

/// Node sets of a largest common connected subtree, one per input, sorted by id.
struct McsResult {
  std::vector<NodeId> first;
  std::vector<NodeId> second;
  std::size_t size() const { return first.size(); }
};

/// Largest pair of connected subtrees that are isomorphic as ordered labeled
/// trees (parent-child edges and sibling order preserved). Among equally large
/// matches the one with the smallest (first top, second top) preorder pair wins.
McsResult mcs(const LabeledTree& a, const LabeledTree& b);
McsResult mcs(const AttributeTree& a, const AttributeTree& b);

/// |MCS| * 100 / sqrt(|a| |b|); 0 when either tree is empty.
double mcs_score(const LabeledTree& a, const LabeledTree& b);
double mcs_score(const AttributeTree& a, const AttributeTree& b);

/// Sum over node pairs of theta(u, v)^2 * lambda^max(depth u, depth v), where
/// theta counts shared rooted substructures: for equal root labels the sum of
/// theta over all child pairs, plus one when the two subtrees are identical
/// as ordered labeled trees. The root has depth 0.
double tree_kernel(const LabeledTree& a, const LabeledTree& b, const MetricConfig& cfg = {});
double tree_kernel(const AttributeTree& a, const AttributeTree& b, const MetricConfig& cfg = {});

/// TK(a, b) * 100 / sqrt(TK(a, a) TK(b, b)), capped at 100. A zero self-kernel
/// yields 0 and a logged warning.
double tk_score(const LabeledTree& a, const LabeledTree& b, const MetricConfig& cfg = {});
double tk_score(const AttributeTree& a, const AttributeTree& b, const MetricConfig& cfg = {});

/// Mean point-to-set distance from `q` to the non-root nodes of `explanation`.
/// Throws DataError naming any non-root node without support.
double sample_mscd(const EmbeddingVector& q, const AttributeTree& explanation,
                   const EmbeddingStore& store, const DistanceConfig& dist);

struct ExplainedSample {
  EmbeddingVector embedding;
  ExplanationTree explanation;
};

/// Average of `sample_mscd` over samples. More negative is more faithful.
double mscd(std::span<const ExplainedSample> samples, const EmbeddingStore& store,
            const DistanceConfig& dist);

struct MetricRow {
  std::string sample_id;
  double ted = 0.0;
  double mcs = 0.0;
  double tk = 0.0;
};

struct MetricReport {
  std::string method;
  std::vector<MetricRow> rows;
  double mean_ted = 0.0;
  double mean_mcs = 0.0;
  double mean_tk = 0.0;
  std::optional<double> mscd;
};

struct ScoredPair {
  std::string sample_id;
  AttributeTree predicted;
  AttributeTree truth;
};

/// Scores every pair and fills the means.
MetricReport evaluate_pairs(std::string method, std::span<const ScoredPair> pairs,
                            const MetricConfig& cfg);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);
/// `sample_id,ted,mcs,tk` header plus one row per sample.
std::string report_csv(const MetricReport& report);
/// `{"models": [{"model", "ted", "mcs", "tk"[, "mscd"], "samples"}...]}`.
Json report_summary(std::span<const MetricReport> reports);

}  // namespace lvx

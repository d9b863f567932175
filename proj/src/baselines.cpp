#include "lvx/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "lvx/errors.hpp"

namespace lvx {
namespace {

// Unbiased draw from [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined and would make seeds non-portable.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Random: return "random";
    case BaselineKind::Constant: return "constant";
    case BaselineKind::Subtree: return "subtree";
  }
  return "random";
}

std::optional<BaselineKind> parse_baseline_kind(std::string_view text) {
  for (auto kind : {BaselineKind::Random, BaselineKind::Constant, BaselineKind::Subtree})
    if (to_string(kind) == text) return kind;
  return std::nullopt;
}

ExplanationTree random_baseline(const AttributeTree& tree, std::size_t n_nodes,
                                std::uint64_t seed) {
  const std::size_t available = tree.size() - 1;
  if (n_nodes > available)
    throw DataError("random baseline asks for " + std::to_string(n_nodes) + " nodes but tree '" +
                    tree.category() + "' has " + std::to_string(available) + " non-root nodes");
  std::vector<NodeId> pool(available);
  std::iota(pool.begin(), pool.end(), NodeId{1});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, available - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_nodes);
  return merge_paths(tree, pool);
}

std::uint64_t sample_seed(std::uint64_t run_seed, std::string_view sample_id) {
  std::uint64_t h = 14695981039346656037ull ^ run_seed;
  for (unsigned char c : sample_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExplanationTree constant_baseline(const std::string& category, const TreeMap& initial_trees) {
  const auto it = initial_trees.find(category);
  if (it == initial_trees.end())
    throw DataError("constant baseline: no initial tree for category '" + category + "'");
  const AttributeTree& tree = it->second;
  std::vector<NodeId> all(tree.size());
  std::iota(all.begin(), all.end(), NodeId{0});
  ExplanationTree out = merge_paths(tree, all);
  out.selected_nodes.erase(out.selected_nodes.begin());
  return out;
}

ExplanationTree subtree_baseline(const std::string& category,
                                 std::span<const LabeledSample> held_out, const TreeMap& trees,
                                 const EmbeddingStore& store, const RoutingConfig& route,
                                 const DistanceConfig& dist) {
  const auto it = trees.find(category);
  if (it == trees.end())
    throw DataError("subtree baseline: no tree for category '" + category + "'");
  const AttributeTree& tree = it->second;

  std::vector<std::size_t> frequency(tree.size(), 0);
  std::size_t routed = 0;
  for (const auto& sample : held_out) {
    if (sample.category != category) continue;
    ++routed;
    const auto e = explain(sample.embedding, category, trees, store, route, dist);
    for (NodeId id : e.selected_nodes) ++frequency[e.source_ids[id]];
  }
  if (routed == 0)
    throw DataError("subtree baseline: no held-out samples for category '" + category + "'");

  std::vector<NodeId> order(tree.size() - 1);
  std::iota(order.begin(), order.end(), NodeId{1});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return frequency[a] > frequency[b]; });
  order.resize(std::min(route.k, order.size()));
  return merge_paths(tree, order);
}

}  // namespace lvx

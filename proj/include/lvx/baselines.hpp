#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "lvx/embedding.hpp"
#include "lvx/refinement.hpp"
#include "lvx/routing.hpp"
#include "lvx/tree.hpp"

namespace lvx {

enum class BaselineKind { Random, Constant, Subtree };

/// "random", "constant", "subtree".
std::string_view to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline_kind(std::string_view text);

/// Path union of `n_nodes` distinct non-root nodes drawn uniformly with `seed`.
/// The draw is a partial Fisher-Yates shuffle over a 64-bit Mersenne Twister,
/// so it is reproducible across platforms. Throws DataError when the tree has
/// fewer than `n_nodes` non-root nodes.
ExplanationTree random_baseline(const AttributeTree& tree, std::size_t n_nodes,
                                std::uint64_t seed);

/// Seed for the random baseline of one sample: the run seed mixed with the sample id.
std::uint64_t sample_seed(std::uint64_t run_seed, std::string_view sample_id);

/// The stored initial tree of `category`, whole. Throws DataError if missing.
ExplanationTree constant_baseline(const std::string& category, const TreeMap& initial_trees);

/// Routes every held-out sample of `category`, counts how often each node is
/// selected, and merges the paths of the `route.k` most frequent nodes (ties by
/// preorder). Throws DataError when no held-out sample belongs to the category.
ExplanationTree subtree_baseline(const std::string& category,
                                 std::span<const LabeledSample> held_out, const TreeMap& trees,
                                 const EmbeddingStore& store, const RoutingConfig& route,
                                 const DistanceConfig& dist);

}  // namespace lvx

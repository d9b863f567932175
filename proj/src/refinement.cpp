#include "lvx/refinement.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "lvx/errors.hpp"
#include "lvx/log.hpp"

namespace lvx {
namespace {

// Walks from the root spec to the spec of `node`, following child positions.
NodeSpec& spec_at(NodeSpec& root, const AttributeTree& tree, NodeId node) {
  NodeSpec* cur = &root;
  const auto path = tree.path_from_root(node);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& siblings = tree.node(path[i - 1]).children;
    const auto pos = std::find(siblings.begin(), siblings.end(), path[i]) - siblings.begin();
    cur = &cur->children[static_cast<std::size_t>(pos)];
  }
  return *cur;
}

NodeSpec without(const AttributeTree& tree, NodeId id, const std::vector<char>& removed) {
  const TreeNode& n = tree.node(id);
  NodeSpec spec{n.label, n.kind, n.support, {}};
  for (NodeId child : n.children)
    if (!removed[child]) spec.children.push_back(without(tree, child, removed));
  return spec;
}

bool is_kind_name(std::string_view label) {
  const auto kind = parse_node_kind(label);
  return kind && *kind != NodeKind::Root && *kind != NodeKind::Leaf;
}

// Collects support embeddings for freshly attached specs.
class SupportBinder {
 public:
  SupportBinder(std::string category, SupportSource& source, const EmbeddingStore& store)
      : category_(std::move(category)), source_(source), store_(store) {}

  void bind(NodeSpec& spec) {
    const bool resolvable =
        !spec.support.empty() &&
        std::all_of(spec.support.begin(), spec.support.end(), [&](const std::string& id) {
          return store_.find(id) || fetched_ids_.count(id);
        });
    if (!resolvable) {
      spec.support.clear();
      for (auto& v : source_.supports_for(category_, trim(spec.label))) {
        spec.support.push_back(v.id);
        if (!store_.find(v.id) && fetched_ids_.insert(v.id).second) fetched_.push_back(std::move(v));
      }
      if (spec.support.empty())
        log_warning("no support embeddings for '" + category_ + "/" + spec.label + "'");
    }
    for (auto& child : spec.children) bind(child);
  }

  std::vector<EmbeddingVector> take() { return std::move(fetched_); }

 private:
  std::string category_;
  SupportSource& source_;
  const EmbeddingStore& store_;
  std::set<std::string, std::less<>> fetched_ids_;
  std::vector<EmbeddingVector> fetched_;
};

NodeSpec as_child(NodeSpec spec) {
  if (spec.kind == NodeKind::Root) spec.kind = NodeKind::Leaf;
  return spec;
}

// Label proposed by a contrast reply: a JSON "name" when present, else its first line.
std::string contrast_label(const std::string& response) {
  if (const auto object = extract_json_object(response)) {
    const Json value = Json::parse(*object);
    if (value.contains("name") && value["name"].is_string()) return trim(value["name"].get<std::string>());
  }
  std::istringstream lines(response);
  std::string line;
  while (std::getline(lines, line)) {
    std::string t = trim(line);
    while (!t.empty() && t.back() == '.') t.pop_back();
    if (!t.empty()) return t;
  }
  return {};
}

std::vector<EmbeddingVector> discriminate_common_nodes(TreeMap& trees, LlmClient& llm,
                                                       SupportSource& supports,
                                                       const EmbeddingStore& store,
                                                       std::size_t iteration,
                                                       std::vector<std::string>& log) {
  // label -> categories carrying it (sorted by the map order).
  std::map<std::string, std::vector<std::string>> owners;
  for (const auto& [category, tree] : trees) {
    std::set<std::string> labels;
    for (const auto& node : tree.nodes())
      if (node.id != tree.root_id() && !is_kind_name(node.label)) labels.insert(node.label);
    for (const auto& label : labels) owners[label].push_back(category);
  }

  struct Rename {
    std::string category;
    NodeId node;
    std::string label;
  };
  std::vector<Rename> renames;
  for (const auto& [category, tree] : trees) {
    for (const auto& node : tree.nodes()) {
      const auto it = owners.find(node.label);
      if (node.id == tree.root_id() || it == owners.end() || it->second.size() < 2) continue;
      const auto& cats = it->second;
      const std::string& other = cats.front() == category ? cats[1] : cats.front();
      const std::string prompt = build_discriminate_prompt(tree, node.id, category, other);
      const std::string reply =
          llm.complete(RequestKey{PromptKind::Discriminate, category, node.label, iteration}, prompt);
      std::string label = contrast_label(reply);
      const auto parent = tree.parent(node.id);
      if (label.empty() || label == node.label || tree.find_child(*parent, label)) {
        log.push_back("discrimination of '" + category + "/" + node.label + "' skipped");
        continue;
      }
      renames.push_back({category, node.id, std::move(label)});
    }
  }

  std::vector<EmbeddingVector> fetched;
  std::set<std::string, std::less<>> fetched_ids;
  std::map<std::string, std::vector<const Rename*>> by_category;
  for (const auto& r : renames) by_category[r.category].push_back(&r);
  for (const auto& [category, list] : by_category) {
    AttributeTree& tree = trees.at(category);
    NodeSpec root = tree.to_spec();
    for (const Rename* r : list) {
      NodeSpec& spec = spec_at(root, tree, r->node);
      log.push_back("renamed '" + category + "/" + spec.label + "' to '" + r->label + "'");
      spec.label = r->label;
      // Without supports for the new wording the old support set stays.
      auto fresh = supports.supports_for(category, r->label);
      if (fresh.empty()) continue;
      spec.support.clear();
      for (auto& v : fresh) {
        spec.support.push_back(v.id);
        if (!store.find(v.id) && fetched_ids.insert(v.id).second) fetched.push_back(std::move(v));
      }
    }
    try {
      tree = AttributeTree::build(root, tree.version());
    } catch (const ValidationError& e) {
      log.push_back("renames in '" + category + "' dropped: " + e.what());
    }
  }
  return fetched;
}

}  // namespace

std::size_t AssignmentTable::total() const {
  return std::accumulate(visits.begin(), visits.end(), std::size_t{0});
}

std::vector<std::size_t> AssignmentTable::subtree_visits(const AttributeTree& tree) const {
  if (visits.size() != tree.size())
    throw DataError("assignment table for '" + category + "' has " +
                    std::to_string(visits.size()) + " counters, tree has " +
                    std::to_string(tree.size()) + " nodes");
  std::vector<std::size_t> sums = visits;
  // Children have larger preorder ids than their parents.
  for (NodeId id = tree.size(); id-- > 1;) sums[*tree.parent(id)] += sums[id];
  return sums;
}

std::vector<NodeDistance> node_distances(const EmbeddingVector& q, const AttributeTree& tree,
                                         const EmbeddingStore& store,
                                         const DistanceConfig& cfg) {
  std::vector<NodeDistance> out;
  for (const auto& node : tree.nodes()) {
    if (node.id == tree.root_id() || node.support.empty()) continue;
    out.push_back({node.id, set_distance(q, store.support_set(tree, node.id), cfg)});
  }
  return out;
}

NodeDistance assign_sample(const EmbeddingVector& q, const AttributeTree& tree,
                           const EmbeddingStore& store, const DistanceConfig& cfg) {
  const auto distances = node_distances(q, tree, store, cfg);
  if (distances.empty())
    throw DataError("tree '" + tree.category() + "' has no supported nodes to assign to");
  // Strict comparison keeps the first (smallest preorder) node on ties.
  return *std::min_element(distances.begin(), distances.end(),
                           [](const auto& a, const auto& b) { return a.distance < b.distance; });
}

AssignmentTable count_visits(std::span<const LabeledSample> samples, const AttributeTree& tree,
                             const EmbeddingStore& store, const DistanceConfig& cfg) {
  AssignmentTable table{tree.category(), {}, std::vector<std::size_t>(tree.size(), 0)};
  for (const auto& sample : samples) {
    if (sample.category != tree.category())
      throw DataError("sample '" + sample.embedding.id + "' of category '" + sample.category +
                      "' counted against tree '" + tree.category() + "'");
    const auto nearest = assign_sample(sample.embedding, tree, store, cfg);
    table.assignments.push_back({sample.embedding.id, nearest.node, nearest.distance});
    ++table.visits[nearest.node];
  }
  std::sort(table.assignments.begin(), table.assignments.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return table;
}

std::map<std::string, AssignmentTable, std::less<>> count_visits(
    std::span<const LabeledSample> samples, const TreeMap& trees, const EmbeddingStore& store,
    const DistanceConfig& cfg) {
  std::map<std::string, std::vector<LabeledSample>, std::less<>> grouped;
  std::set<std::string> unknown;
  for (const auto& s : samples) {
    if (trees.count(s.category)) grouped[s.category].push_back(s);
    else unknown.insert(s.category);
  }
  if (!unknown.empty()) {
    std::string names;
    for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + ("'" + u + "'");
    throw DataError("samples reference categories without a tree: " + names);
  }
  std::map<std::string, AssignmentTable, std::less<>> tables;
  for (const auto& [category, tree] : trees) {
    const auto it = grouped.find(category);
    tables.emplace(category, it == grouped.end()
                                 ? count_visits(std::span<const LabeledSample>{}, tree, store, cfg)
                                 : count_visits(it->second, tree, store, cfg));
  }
  return tables;
}

AttributeTree prune(const AttributeTree& tree, const AssignmentTable& table,
                    const RefinementConfig& cfg) {
  const auto effective = table.subtree_visits(tree);
  if (table.total() == 0) return tree;

  std::vector<char> removed(tree.size(), 0);
  const auto covered = [&](NodeId id) {
    for (NodeId a : tree.path_from_root(id))
      if (removed[a]) return true;
    return false;
  };
  const auto supported_left_without = [&](NodeId cut) {
    std::size_t left = 0;
    for (const auto& node : tree.nodes())
      if (node.id != tree.root_id() && !node.support.empty() && !covered(node.id) &&
          !(node.id >= cut && node.id < tree.subtree_end(cut)))
        ++left;
    return left;
  };

  // Subtrees without a single visit go regardless of the quota.
  for (NodeId id = 1; id < tree.size(); ++id)
    if (effective[id] == 0) removed[id] = 1;

  std::vector<NodeId> candidates(tree.size() - 1);
  std::iota(candidates.begin(), candidates.end(), NodeId{1});
  std::sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
    if (effective[a] != effective[b]) return effective[a] < effective[b];
    if (tree.subtree_size(a) != tree.subtree_size(b))
      return tree.subtree_size(a) < tree.subtree_size(b);
    return a < b;
  });

  std::size_t taken = 0;
  for (NodeId id : candidates) {
    if (taken >= cfg.prune_count) break;
    if (covered(id)) {
      ++taken;
      continue;
    }
    if (supported_left_without(id) == 0) continue;
    removed[id] = 1;
    ++taken;
  }
  return AttributeTree::build(without(tree, tree.root_id(), removed), tree.version());
}

std::string build_grow_prompt(const AttributeTree& tree, NodeId node, std::string_view class_name,
                              std::string_view in_context_example) {
  if (node == tree.root_id())
    throw ValidationError("grow", "the root of '" + tree.category() +
                                      "' is not a growth candidate");
  const std::string prompt =
      render_prompt(PromptKind::Grow,
                    {{"node_name", tree.node(node).label}, {"class_name", std::string(class_name)}},
                    in_context_example);
  NodeSpec subtree = tree.to_spec(node);
  subtree.kind = NodeKind::Root;
  return prompt + "\n" + serialize_tree(AttributeTree::build(subtree));
}

std::string build_discriminate_prompt(const AttributeTree& tree, NodeId node,
                                      std::string_view class_name,
                                      std::string_view other_class_name) {
  return render_prompt(PromptKind::Discriminate,
                       {{"node_name", tree.node(node).label},
                        {"class_name", std::string(class_name)},
                        {"other_class_name", std::string(other_class_name)}});
}

GrowOutcome grow(const AttributeTree& tree, const AssignmentTable& table, LlmClient& llm,
                 SupportSource& supports, const EmbeddingStore& store,
                 const RefinementConfig& cfg, std::size_t iteration) {
  if (table.visits.size() != tree.size())
    throw DataError("assignment table does not match tree '" + tree.category() + "'");

  std::vector<NodeId> ranked;
  for (NodeId id = 1; id < tree.size(); ++id)
    if (table.visits[id] > 0) ranked.push_back(id);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](NodeId a, NodeId b) { return table.visits[a] > table.visits[b]; });
  if (ranked.size() > cfg.grow_count) ranked.resize(cfg.grow_count);

  GrowOutcome out{tree.with_version(tree.version() + 1), {}, {}};
  if (ranked.empty()) return out;

  NodeSpec root = tree.to_spec();
  SupportBinder binder(tree.category(), supports, store);
  for (NodeId id : ranked) {
    const std::string& label = tree.node(id).label;
    const std::string prompt = build_grow_prompt(tree, id, tree.category(), cfg.in_context_example);
    const std::string reply =
        llm.complete(RequestKey{PromptKind::Grow, tree.category(), label, iteration}, prompt);

    std::optional<AttributeTree> fragment;
    try {
      fragment = parse_attribute_response(reply);
    } catch (const Error& e) {
      const std::string reason =
          "growth of '" + tree.category() + "/" + label + "' skipped: " + e.what();
      log_warning(reason);
      out.skipped.push_back(reason);
      continue;
    }

    std::vector<NodeSpec> proposed;
    const NodeSpec fragment_root = fragment->to_spec();
    if (!fragment_root.children.empty()) proposed = fragment_root.children;
    else if (fragment_root.label != label) proposed.push_back(as_child(fragment_root));

    NodeSpec& target = spec_at(root, tree, id);
    std::set<std::string, std::less<>> siblings;
    for (const auto& c : target.children) siblings.insert(trim(c.label));
    for (auto& child : proposed) {
      if (!siblings.insert(trim(child.label)).second) continue;
      NodeSpec attached = as_child(std::move(child));
      binder.bind(attached);
      target.children.push_back(std::move(attached));
    }
  }
  out.tree = AttributeTree::build(root, tree.version() + 1);
  out.new_supports = binder.take();
  return out;
}

AttributeTree build_initial_tree(const std::string& category, LlmClient& llm,
                                 std::string_view in_context_example) {
  const std::string prompt =
      render_prompt(PromptKind::InitialAttributes, {{"class_name", category}}, in_context_example);
  const std::string reply =
      llm.complete(RequestKey{PromptKind::InitialAttributes, category, "", 0}, prompt);
  NodeSpec root = parse_attribute_response(reply).to_spec();
  if (root.label != category) {
    log_info("initial tree for '" + category + "' arrived with root '" + root.label +
             "'; renamed");
    root.label = category;
  }
  root.kind = NodeKind::Root;
  return AttributeTree::build(root, 0);
}

RefineResult refine(const TreeMap& initial, std::span<const LabeledSample> train,
                    const EmbeddingStore& store, LlmClient& llm, SupportSource& supports,
                    const RefinementConfig& cfg, const DistanceConfig& dist) {
  dist.validate();
  RefineResult result{initial, store, {}};

  for (auto& [category, tree] : result.trees) {
    auto bound = bind_supports(tree, supports, result.store);
    if (!bound.added.empty()) result.store = result.store.merged(std::move(bound.added));
    tree = std::move(bound.tree);
  }

  for (std::size_t t = 0; t < cfg.t_max; ++t) {
    auto tables = count_visits(train, result.trees, result.store, dist);
    for (auto& [category, tree] : result.trees) {
      const std::size_t before = tree.size();
      tree = prune(tree, tables.at(category), cfg);
      if (tree.size() != before)
        result.log.push_back("iteration " + std::to_string(t) + ": pruned " +
                             std::to_string(before - tree.size()) + " nodes from '" + category +
                             "'");
    }

    tables = count_visits(train, result.trees, result.store, dist);
    for (auto& [category, tree] : result.trees) {
      auto grown = grow(tree, tables.at(category), llm, supports, result.store, cfg, t);
      for (auto& reason : grown.skipped) result.log.push_back(std::move(reason));
      if (grown.tree.size() != tree.size())
        result.log.push_back("iteration " + std::to_string(t) + ": grew '" + category + "' by " +
                             std::to_string(grown.tree.size() - tree.size()) + " nodes");
      if (!grown.new_supports.empty())
        result.store = result.store.merged(std::move(grown.new_supports));
      tree = std::move(grown.tree);
    }

    if (cfg.discriminate_common) {
      auto fetched = discriminate_common_nodes(result.trees, llm, supports, result.store, t,
                                               result.log);
      if (!fetched.empty()) result.store = result.store.merged(std::move(fetched));
    }
  }
  return result;
}

}  // namespace lvx

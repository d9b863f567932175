#include "lvx/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "lvx/errors.hpp"

namespace lvx {
namespace {

void check_finite(const EmbeddingVector& v, const std::string& where) {
  for (std::size_t i = 0; i < v.values.size(); ++i)
    if (!std::isfinite(v.values[i]))
      throw ValidationError(where, "embedding '" + v.id + "' has a non-finite value at index " +
                                       std::to_string(i));
}

EmbeddingVector vector_from_json(const Json& record, const std::string& where) {
  if (!record.is_object()) throw ValidationError(where, "expected a JSON object");
  const auto id = record.find("id");
  if (id == record.end() || !id->is_string())
    throw ValidationError(where, "missing string field 'id'");

  EmbeddingVector v;
  v.id = id->get<std::string>();
  if (const auto label = record.find("label"); label != record.end() && !label->is_null()) {
    if (!label->is_string()) throw ValidationError(where, "'label' must be a string or null");
    v.label = label->get<std::string>();
  }
  const auto values = record.find("vector");
  if (values == record.end() || !values->is_array())
    throw ValidationError(where, "missing array field 'vector'");
  v.values.reserve(values->size());
  for (const auto& x : *values) {
    if (!x.is_number()) throw ValidationError(where, "'vector' entries must be numbers");
    v.values.push_back(x.get<double>());
  }
  if (v.values.empty()) throw ValidationError(where, "'vector' is empty");
  check_finite(v, where);
  return v;
}

}  // namespace

void DistanceConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ValidationError("epsilon", "must lie in (0, 1), got " + std::to_string(epsilon));
}

EmbeddingStore EmbeddingStore::from_vectors(std::vector<EmbeddingVector> vectors) {
  EmbeddingStore store;
  store.vectors_.reserve(vectors.size());
  for (auto& v : vectors) {
    const std::string where = "embedding '" + v.id + "'";
    if (v.values.empty()) throw ValidationError(where, "vector is empty");
    if (store.dim_ == 0) store.dim_ = v.dim();
    if (v.dim() != store.dim_)
      throw ValidationError(where, "dimension " + std::to_string(v.dim()) + " != " +
                                       std::to_string(store.dim_));
    check_finite(v, where);
    if (!store.index_.emplace(v.id, store.vectors_.size()).second)
      throw ValidationError(where, "duplicate id");
    store.vectors_.push_back(std::move(v));
  }
  return store;
}

const EmbeddingVector* EmbeddingStore::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

const EmbeddingVector& EmbeddingStore::at(std::string_view id) const {
  if (const auto* v = find(id)) return *v;
  throw DataError("unknown embedding id '" + std::string(id) + "'");
}

EmbeddingStore EmbeddingStore::merged(std::vector<EmbeddingVector> extra) const {
  std::vector<EmbeddingVector> all = vectors_;
  all.insert(all.end(), std::make_move_iterator(extra.begin()),
             std::make_move_iterator(extra.end()));
  EmbeddingStore out = from_vectors(std::move(all));
  out.meta_ = meta_;
  return out;
}

EmbeddingStore EmbeddingStore::merged(const EmbeddingStore& other) const {
  return merged(std::vector<EmbeddingVector>(other.vectors_.begin(), other.vectors_.end()));
}

SupportSet EmbeddingStore::support_set(const AttributeTree& tree, NodeId node) const {
  SupportSet set{node, {}};
  for (const auto& id : tree.node(node).support) {
    const EmbeddingVector* v = find(id);
    if (!v)
      throw DataError("node '" + tree.node(node).label + "' of tree '" + tree.category() +
                      "' references unknown embedding '" + id + "'");
    set.members.push_back(v);
  }
  return set;
}

EmbeddingStore parse_embeddings(std::istream& in, const std::string& source) {
  std::vector<EmbeddingVector> vectors;
  Json meta;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;

    const std::string where = source + ":" + std::to_string(line_no);
    Json record;
    try {
      record = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": malformed JSON: " + e.what(), line_start + e.byte);
    }
    if (record.is_object() && record.contains("id") && record["id"] == kMetaRecordId) {
      meta = std::move(record);
      continue;
    }
    EmbeddingVector v = vector_from_json(record, where);
    if (dim == 0) dim = v.dim();
    if (v.dim() != dim)
      throw ValidationError(where, "dimension mismatch: expected " + std::to_string(dim) +
                                       ", got " + std::to_string(v.dim()));
    vectors.push_back(std::move(v));
  }
  EmbeddingStore store = EmbeddingStore::from_vectors(std::move(vectors));
  store.meta_ = std::move(meta);
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  return parse_embeddings(in, path.string());
}

std::string embedding_to_jsonl(const EmbeddingVector& v) {
  Json out = Json::object();
  out["id"] = v.id;
  out["label"] = v.label ? Json(*v.label) : Json(nullptr);
  out["vector"] = v.values;
  return out.dump();
}

void write_embeddings(const std::filesystem::path& path,
                      std::span<const EmbeddingVector> vectors) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& v : vectors) out << embedding_to_jsonl(v) << '\n';
}

double squared_distance(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size())
    throw DataError("dimension mismatch: " + std::to_string(q.size()) + " vs " +
                    std::to_string(p.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double diff = q[i] - p[i];
    sum += diff * diff;
  }
  return sum;
}

double pair_distance(std::span<const double> q, std::span<const double> p,
                     const DistanceConfig& cfg) {
  const double s = squared_distance(q, p);
  // (s + 1) / (s + eps) == 1 + (1 - eps) / (s + eps); log1p keeps the far tail accurate.
  return -std::log1p((1.0 - cfg.epsilon) / (s + cfg.epsilon));
}

double pair_distance(const EmbeddingVector& q, const EmbeddingVector& p,
                     const DistanceConfig& cfg) {
  return pair_distance(std::span<const double>(q.values), std::span<const double>(p.values), cfg);
}

double set_distance(const EmbeddingVector& q, const SupportSet& support,
                    const DistanceConfig& cfg) {
  if (support.members.empty())
    throw DataError("empty support set for node " + std::to_string(support.node));
  double best = std::numeric_limits<double>::infinity();
  for (const EmbeddingVector* p : support.members) best = std::min(best, pair_distance(q, *p, cfg));
  return best;
}

PoolSupportSource::PoolSupportSource(EmbeddingStore pool) : pool_(std::move(pool)) {
  const auto vectors = pool_.vectors();
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (vectors[i].label) by_label_[*vectors[i].label].push_back(i);
}

std::vector<EmbeddingVector> PoolSupportSource::supports_for(std::string_view category,
                                                             std::string_view node_label) {
  auto it = by_label_.find(std::string(category) + "/" + std::string(node_label));
  if (it == by_label_.end()) it = by_label_.find(std::string(node_label));
  std::vector<EmbeddingVector> out;
  if (it == by_label_.end()) return out;
  for (std::size_t i : it->second) out.push_back(pool_.vectors()[i]);
  return out;
}

BoundTree bind_supports(const AttributeTree& tree, SupportSource& source,
                        const EmbeddingStore& store) {
  BoundTree out{tree, {}};
  std::set<std::string, std::less<>> added_ids;
  bool changed = false;

  std::function<void(NodeSpec&, bool)> visit = [&](NodeSpec& spec, bool is_root) {
    if (!is_root && spec.support.empty()) {
      for (auto& v : source.supports_for(tree.category(), trim(spec.label))) {
        spec.support.push_back(v.id);
        if (!store.find(v.id) && added_ids.insert(v.id).second) out.added.push_back(std::move(v));
      }
      changed = changed || !spec.support.empty();
    }
    for (auto& child : spec.children) visit(child, false);
  };

  NodeSpec root = tree.to_spec();
  visit(root, true);
  if (changed) out.tree = AttributeTree::build(root, tree.version());
  return out;
}

}  // namespace lvx

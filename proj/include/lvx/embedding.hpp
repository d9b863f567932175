#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lvx/tree.hpp"

namespace lvx {

struct EmbeddingVector {
  std::string id;
  /// Category for samples; attribute label for support-pool entries.
  std::optional<std::string> label;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

struct DistanceConfig {
  /// Numerical floor in the log distance. Must lie in (0, 1).
  double epsilon = 1e-6;

  void validate() const;
};

/// Members of one node's support set. Pointers refer into an EmbeddingStore.
struct SupportSet {
  NodeId node = 0;
  std::vector<const EmbeddingVector*> members;
};

/// Read-only collection of embeddings sharing one dimension.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  /// Throws ValidationError on mixed dimensions, non-finite entries, empty
  /// vectors, or duplicate ids.
  static EmbeddingStore from_vectors(std::vector<EmbeddingVector> vectors);

  std::size_t size() const { return vectors_.size(); }
  bool empty() const { return vectors_.empty(); }
  /// 0 while the store is empty.
  std::size_t dim() const { return dim_; }

  std::span<const EmbeddingVector> vectors() const { return vectors_; }
  const EmbeddingVector* find(std::string_view id) const;
  /// Throws DataError when absent.
  const EmbeddingVector& at(std::string_view id) const;

  /// A new store holding this store's vectors followed by `extra`.
  EmbeddingStore merged(std::vector<EmbeddingVector> extra) const;
  EmbeddingStore merged(const EmbeddingStore& other) const;

  /// Resolves the support ids of `node`. Unknown ids throw DataError; a node
  /// without support yields an empty member list.
  SupportSet support_set(const AttributeTree& tree, NodeId node) const;

  /// Header record (`"id": "__meta__"`) of the file this store came from, or null.
  const Json& meta() const { return meta_; }

 private:
  friend EmbeddingStore parse_embeddings(std::istream& in, const std::string& source);

  std::vector<EmbeddingVector> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dim_ = 0;
  Json meta_;
};

inline constexpr std::string_view kMetaRecordId = "__meta__";

/// JSONL, one `{"id", "label", "vector"}` object per line. The first data line
/// fixes the dimension. Blank lines and `__meta__` records are skipped.
EmbeddingStore parse_embeddings(std::istream& in, const std::string& source = "<stream>");
EmbeddingStore load_embeddings(const std::filesystem::path& path);

std::string embedding_to_jsonl(const EmbeddingVector& v);
void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors);

double squared_distance(std::span<const double> q, std::span<const double> p);

/// -log((s + 1) / (s + eps)) with s = |q - p|^2. Lies in (log eps, 0) and grows
/// strictly with s. Throws DataError on dimension mismatch.
double pair_distance(std::span<const double> q, std::span<const double> p,
                     const DistanceConfig& cfg = {});
double pair_distance(const EmbeddingVector& q, const EmbeddingVector& p,
                     const DistanceConfig& cfg = {});

/// Minimum pair distance from `q` to the members of `support`. Throws DataError
/// for an empty set.
double set_distance(const EmbeddingVector& q, const SupportSet& support,
                    const DistanceConfig& cfg = {});

/// Supplies support embeddings for attributes that have none yet (grown nodes,
/// freshly generated trees).
class SupportSource {
 public:
  virtual ~SupportSource() = default;
  virtual std::vector<EmbeddingVector> supports_for(std::string_view category,
                                                    std::string_view node_label) = 0;
};

/// Support source backed by pre-extracted embeddings whose `label` names the
/// attribute they depict, either `"<category>/<attribute>"` or just `"<attribute>"`.
/// The qualified form wins when both exist.
class PoolSupportSource : public SupportSource {
 public:
  explicit PoolSupportSource(EmbeddingStore pool);

  std::vector<EmbeddingVector> supports_for(std::string_view category,
                                            std::string_view node_label) override;

 private:
  EmbeddingStore pool_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_label_;
};

struct BoundTree {
  AttributeTree tree;
  /// Embeddings referenced by the new support lists and not yet in the store.
  std::vector<EmbeddingVector> added;
};

/// Gives every non-root node without a support list the ids of the embeddings
/// `source` provides for it. Nodes the source knows nothing about stay unsupported.
BoundTree bind_supports(const AttributeTree& tree, SupportSource& source,
                        const EmbeddingStore& store);

}  // namespace lvx

#include "synthetic.hpp"

#include <cmath>

namespace lvx::testing {
namespace {

const std::vector<std::pair<std::string, std::vector<std::string>>> kLayout{
    {"a", {"a1", "a2"}},
    {"b", {"b1", "b2", "b3"}},
};
const std::vector<std::string> kSpurious{"s1", "s2", "s3", "s4"};

std::vector<double> axis(std::size_t dim, std::size_t i, double length) {
  std::vector<double> v(dim, 0.0);
  v.at(i) = length;
  return v;
}

}  // namespace

std::vector<double> draw(const std::vector<double>& center, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> out(center);
  for (double& x : out) x += noise(rng);
  return out;
}

GaussianFixture make_gaussian_fixture(std::uint64_t seed, std::size_t categories) {
  GaussianFixture f;
  std::mt19937_64 rng(seed);
  const double length = f.separation / std::sqrt(2.0);
  std::vector<EmbeddingVector> vectors;

  const auto supports_for = [&](const std::string& key, const std::vector<double>& center) {
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < f.support_k; ++k) {
      EmbeddingVector v{key + "#" + std::to_string(k), key, draw(center, f.sigma, rng)};
      ids.push_back(v.id);
      vectors.push_back(std::move(v));
    }
    return ids;
  };

  for (std::size_t c = 0; c < categories; ++c) {
    const std::string cat = "k" + std::to_string(c);
    f.categories.push_back(cat);
    NodeSpec root{cat, NodeKind::Root, {}, {}};
    std::size_t next_axis = 0;
    for (const auto& [branch, leaves] : kLayout) {
      const std::string label = cat + " " + branch;
      f.centers[cat + "/" + label] = axis(f.dim, next_axis++, length);
      NodeSpec node{label, NodeKind::Attributes, supports_for(cat + "/" + label, f.centers[cat + "/" + label]), {}};
      for (const auto& leaf : leaves) {
        const std::string leaf_label = cat + " " + leaf;
        f.centers[cat + "/" + leaf_label] = axis(f.dim, next_axis++, length);
        node.children.push_back(
            {leaf_label, NodeKind::Leaf, supports_for(cat + "/" + leaf_label, f.centers[cat + "/" + leaf_label]), {}});
      }
      root.children.push_back(std::move(node));
    }
    f.trees.emplace(cat, AttributeTree::build(root));

    // Spurious leaves: two under the branches, two under the root. Their
    // centers are far enough out that no sample ever lands on them.
    NodeSpec padded = root;
    for (std::size_t s = 0; s < kSpurious.size(); ++s) {
      const std::string label = cat + " " + kSpurious[s];
      f.centers[cat + "/" + label] = axis(f.dim, next_axis++, 4.0 * length);
      f.spurious[cat].push_back(label);
      NodeSpec leaf{label, NodeKind::Leaf, supports_for(cat + "/" + label, f.centers[cat + "/" + label]), {}};
      if (s < 2) padded.children[s].children.push_back(std::move(leaf));
      else padded.children.push_back(std::move(leaf));
    }
    f.padded.emplace(cat, AttributeTree::build(padded));
  }
  f.supports = EmbeddingStore::from_vectors(std::move(vectors));
  return f;
}

std::vector<MixtureSample> mixture_samples(const GaussianFixture& f, std::size_t per_category,
                                           std::mt19937_64& rng, const std::string& id_prefix) {
  std::vector<MixtureSample> out;
  for (const auto& cat : f.categories) {
    const AttributeTree& tree = f.trees.at(cat);
    for (std::size_t i = 0; i < per_category; ++i) {
      const NodeId u = 1 + rng() % (tree.size() - 1);
      NodeId v = 1 + rng() % (tree.size() - 2);
      if (v >= u) ++v;
      const auto& cu = f.centers.at(cat + "/" + tree.node(u).label);
      const auto& cv = f.centers.at(cat + "/" + tree.node(v).label);
      std::vector<double> mid(f.dim);
      for (std::size_t d = 0; d < f.dim; ++d) mid[d] = 0.5 * (cu[d] + cv[d]);
      const std::string id = id_prefix + cat + "-" + std::to_string(i);
      out.push_back({EmbeddingVector{id, cat, draw(mid, f.sigma, rng)}, cat, std::min(u, v),
                     std::max(u, v)});
    }
  }
  return out;
}

std::vector<LabeledSample> node_samples(const GaussianFixture& f, std::size_t per_node,
                                        std::mt19937_64& rng, const std::string& id_prefix) {
  std::vector<LabeledSample> out;
  for (const auto& cat : f.categories) {
    const AttributeTree& tree = f.trees.at(cat);
    for (NodeId u = 1; u < tree.size(); ++u)
      for (std::size_t i = 0; i < per_node; ++i) {
        const std::string id = id_prefix + cat + "-" + std::to_string(u) + "-" + std::to_string(i);
        out.push_back({EmbeddingVector{id, cat, draw(f.centers.at(cat + "/" + tree.node(u).label), f.sigma, rng)}, cat});
      }
  }
  return out;
}

std::vector<EmbeddingVector> SyntheticSupportSource::supports_for(std::string_view category,
                                                                  std::string_view node_label) {
  ++calls_;
  const std::string key = std::string(category) + "/" + std::string(node_label);
  std::vector<double> center;
  if (const auto it = fixture_.centers.find(key); it != fixture_.centers.end()) {
    center = it->second;
  } else {
    center.assign(fixture_.dim, 0.0);
    center.back() = -10.0 * fixture_.separation;
  }
  const std::size_t batch = issued_[key]++;
  std::vector<EmbeddingVector> out;
  for (std::size_t k = 0; k < fixture_.support_k; ++k)
    out.push_back({"syn:" + key + "#" + std::to_string(batch) + "." + std::to_string(k), key,
                   draw(center, fixture_.sigma, rng_)});
  return out;
}

}  // namespace lvx::testing

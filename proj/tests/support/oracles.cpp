#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace lvx::testing {
namespace {

struct Shape {
  std::vector<std::size_t> parent;  // parent[0] unused
  std::vector<std::vector<char>> ancestor;  // ancestor[x][y]: x is a proper ancestor of y
};

Shape shape_of(const LabeledTree& t) {
  Shape s;
  const std::size_t n = t.size();
  s.parent.assign(n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t c : t.children[u]) s.parent[c] = u;
  s.ancestor.assign(n, std::vector<char>(n, 0));
  for (std::size_t y = 1; y < n; ++y)
    for (std::size_t x = s.parent[y];; x = s.parent[x]) {
      s.ancestor[x][y] = 1;
      if (x == 0) break;
    }
  return s;
}

std::string canonical(const AttributeTree& t, const std::vector<NodeId>& set, NodeId u) {
  std::string out = std::to_string(t.node(u).label.size()) + ":" + t.node(u).label + "(";
  for (NodeId c : t.node(u).children)
    if (std::binary_search(set.begin(), set.end(), c)) out += canonical(t, set, c) + ",";
  return out + ")";
}

bool identical(const LabeledTree& a, std::size_t u, const LabeledTree& b, std::size_t v) {
  if (a.labels[u] != b.labels[v] || a.children[u].size() != b.children[v].size()) return false;
  for (std::size_t i = 0; i < a.children[u].size(); ++i)
    if (!identical(a, a.children[u][i], b, b.children[v][i])) return false;
  return true;
}

double theta(const LabeledTree& a, std::size_t u, const LabeledTree& b, std::size_t v) {
  double sum = 0.0;
  if (a.labels[u] == b.labels[v])
    for (std::size_t cu : a.children[u])
      for (std::size_t cv : b.children[v]) sum += theta(a, cu, b, cv);
  return sum + (identical(a, u, b, v) ? 1.0 : 0.0);
}

std::size_t depth_of(const Shape& s, std::size_t u) {
  std::size_t d = 0;
  while (u != 0) {
    u = s.parent[u];
    ++d;
  }
  return d;
}

}  // namespace

std::size_t ted_oracle(const LabeledTree& a, const LabeledTree& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return n + m;
  const Shape sa = shape_of(a), sb = shape_of(b);
  std::vector<std::pair<std::size_t, std::size_t>> mapping;
  std::size_t best = n + m;

  // Nodes of `a` are visited in preorder; preorder must be preserved, so each
  // mapped partner lies after the previous one.
  std::function<void(std::size_t, std::size_t, std::size_t)> search =
      [&](std::size_t i, std::size_t next_j, std::size_t relabels) {
        if (i == n) {
          const std::size_t k = mapping.size();
          best = std::min(best, (n - k) + (m - k) + relabels);
          return;
        }
        search(i + 1, next_j, relabels);
        for (std::size_t j = next_j; j < m; ++j) {
          bool ok = true;
          for (const auto& [pi, pj] : mapping)
            if (sa.ancestor[pi][i] != sb.ancestor[pj][j]) {
              ok = false;
              break;
            }
          if (!ok) continue;
          mapping.emplace_back(i, j);
          search(i + 1, j + 1, relabels + (a.labels[i] == b.labels[j] ? 0 : 1));
          mapping.pop_back();
        }
      };
  search(0, 0, 0);
  return best;
}

std::size_t mcs_oracle(const AttributeTree& a, const AttributeTree& b) {
  const std::size_t cap = std::max(a.size(), b.size());
  const auto sets_a = enumerate_subtrees(a, cap);
  const auto sets_b = enumerate_subtrees(b, cap);
  std::vector<std::string> forms_b;
  for (const auto& s : sets_b) forms_b.push_back(canonical(b, s, s.front()));
  std::size_t best = 0;
  for (const auto& s : sets_a) {
    if (s.size() <= best) continue;
    const std::string form = canonical(a, s, s.front());
    for (std::size_t j = 0; j < sets_b.size(); ++j)
      if (sets_b[j].size() == s.size() && forms_b[j] == form) {
        best = s.size();
        break;
      }
  }
  return best;
}

double tk_oracle(const LabeledTree& a, const LabeledTree& b, double lambda) {
  if (a.empty() || b.empty()) return 0.0;
  const Shape sa = shape_of(a), sb = shape_of(b);
  double total = 0.0;
  for (std::size_t u = 0; u < a.size(); ++u)
    for (std::size_t v = 0; v < b.size(); ++v) {
      const double t = theta(a, u, b, v);
      total += t * t * std::pow(lambda, static_cast<double>(std::max(depth_of(sa, u), depth_of(sb, v))));
    }
  return total;
}

AttributeTree TreeGenerator::tree(std::size_t max_nodes, std::size_t alphabet, char first_letter) {
  const std::size_t n = 1 + rng_() % max_nodes;
  std::vector<std::vector<std::size_t>> kids(n);
  // Parents are drawn among nodes with room for another distinct child label.
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t parent;
    do {
      parent = rng_() % i;
    } while (kids[parent].size() >= alphabet);
    kids[parent].push_back(i);
  }

  std::vector<std::string> label(n);
  label[0] = std::string(1, static_cast<char>(first_letter + rng_() % alphabet));
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<std::string> used;
    for (std::size_t c : kids[u]) {
      std::string l;
      do {
        l = std::string(1, static_cast<char>(first_letter + rng_() % alphabet));
      } while (std::find(used.begin(), used.end(), l) != used.end());
      used.push_back(l);
      label[c] = l;
    }
  }
  std::function<NodeSpec(std::size_t)> spec = [&](std::size_t u) {
    NodeSpec s{label[u], u == 0 ? NodeKind::Root : NodeKind::Leaf, {}, {}};
    for (std::size_t c : kids[u]) s.children.push_back(spec(c));
    return s;
  };
  return AttributeTree::build(spec(0));
}

AttributeTree tree_of(const std::string& text) {
  std::size_t pos = 0;
  std::function<NodeSpec(bool)> parse = [&](bool root) {
    std::string label;
    while (pos < text.size() && text[pos] != '(' && text[pos] != ',' && text[pos] != ')')
      label += text[pos++];
    NodeSpec s{label, root ? NodeKind::Root : NodeKind::Leaf, {}, {}};
    if (pos < text.size() && text[pos] == '(') {
      ++pos;
      while (true) {
        s.children.push_back(parse(false));
        if (pos >= text.size()) throw std::invalid_argument("unbalanced tree text: " + text);
        if (text[pos++] == ')') break;
      }
    }
    return s;
  };
  return AttributeTree::build(parse(true));
}

}  // namespace lvx::testing

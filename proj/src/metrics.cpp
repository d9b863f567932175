#include "lvx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <utility>

#include "lvx/errors.hpp"
#include "lvx/log.hpp"

namespace lvx {
namespace {

// Postorder view used by the Zhang-Shasha recursion; indices are 1-based.
struct Postorder {
  std::vector<const std::string*> label;  // [1..n]
  std::vector<std::size_t> leftmost;      // [1..n]
  std::vector<std::size_t> keyroots;

  explicit Postorder(const LabeledTree& t) : label(t.size() + 1), leftmost(t.size() + 1) {
    if (t.empty()) return;
    std::size_t next = 0;
    walk(t, 0, next);
    std::vector<char> seen(t.size() + 1, 0);
    for (std::size_t i = t.size(); i >= 1; --i) {
      if (!seen[leftmost[i]]) keyroots.push_back(i);
      seen[leftmost[i]] = 1;
    }
    std::reverse(keyroots.begin(), keyroots.end());
  }

  std::size_t walk(const LabeledTree& t, std::size_t node, std::size_t& next) {
    std::size_t first_leaf = 0;
    for (std::size_t child : t.children[node]) {
      const std::size_t lm = walk(t, child, next);
      if (first_leaf == 0) first_leaf = lm;
    }
    const std::size_t me = ++next;
    label[me] = &t.labels[node];
    leftmost[me] = first_leaf == 0 ? me : first_leaf;
    return leftmost[me];
  }
};

// Integer ids for ordered labeled subtree shapes, shared across trees.
class ShapeTable {
 public:
  std::vector<std::size_t> assign(const LabeledTree& t) {
    std::vector<std::size_t> ids(t.size(), 0);
    for (std::size_t u = t.size(); u-- > 0;) {
      std::vector<std::size_t> kids;
      for (std::size_t c : t.children[u]) kids.push_back(ids[c]);
      auto key = std::make_pair(t.labels[u], std::move(kids));
      ids[u] = table_.emplace(std::move(key), table_.size()).first->second;
    }
    return ids;
  }

 private:
  std::map<std::pair<std::string, std::vector<std::size_t>>, std::size_t> table_;
};

std::vector<std::size_t> depths(const LabeledTree& t) {
  std::vector<std::size_t> d(t.size(), 0);
  for (std::size_t u = 0; u < t.size(); ++u)
    for (std::size_t c : t.children[u]) d[c] = d[u] + 1;
  return d;
}

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace

LabeledTree LabeledTree::from(const AttributeTree& tree) {
  LabeledTree out;
  out.labels.reserve(tree.size());
  out.children.reserve(tree.size());
  for (const auto& node : tree.nodes()) {
    out.labels.push_back(node.label);
    out.children.push_back(node.children);
  }
  return out;
}

void MetricConfig::validate() const {
  if (!(tk_lambda > 0.0 && tk_lambda < 1.0))
    throw ValidationError("tk_lambda", "must lie in (0, 1)");
}

std::size_t ted(const LabeledTree& a, const LabeledTree& b) {
  if (a.empty() || b.empty()) return a.size() + b.size();
  const Postorder pa(a), pb(b);
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> tree_dist(n + 1, std::vector<std::size_t>(m + 1, 0));
  std::vector<std::vector<std::size_t>> forest(n + 1, std::vector<std::size_t>(m + 1, 0));

  for (std::size_t i : pa.keyroots) {
    for (std::size_t j : pb.keyroots) {
      const std::size_t li = pa.leftmost[i], lj = pb.leftmost[j];
      forest[li - 1][lj - 1] = 0;
      for (std::size_t x = li; x <= i; ++x) forest[x][lj - 1] = forest[x - 1][lj - 1] + 1;
      for (std::size_t y = lj; y <= j; ++y) forest[li - 1][y] = forest[li - 1][y - 1] + 1;
      for (std::size_t x = li; x <= i; ++x) {
        for (std::size_t y = lj; y <= j; ++y) {
          const std::size_t del = forest[x - 1][y] + 1;
          const std::size_t ins = forest[x][y - 1] + 1;
          if (pa.leftmost[x] == li && pb.leftmost[y] == lj) {
            const std::size_t rel = forest[x - 1][y - 1] + (*pa.label[x] == *pb.label[y] ? 0 : 1);
            forest[x][y] = std::min({del, ins, rel});
            tree_dist[x][y] = forest[x][y];
          } else {
            const std::size_t sub =
                forest[pa.leftmost[x] - 1][pb.leftmost[y] - 1] + tree_dist[x][y];
            forest[x][y] = std::min({del, ins, sub});
          }
        }
      }
    }
  }
  return tree_dist[n][m];
}

std::size_t ted(const AttributeTree& a, const AttributeTree& b) {
  return ted(LabeledTree::from(a), LabeledTree::from(b));
}

McsResult mcs(const LabeledTree& a, const LabeledTree& b) {
  McsResult result;
  if (a.empty() || b.empty()) return result;
  const std::size_t n = a.size(), m = b.size();
  // best[u][v]: size of the largest match whose tops are u and v.
  std::vector<std::vector<std::size_t>> best(n, std::vector<std::size_t>(m, 0));

  // Weighted ordered matching between child lists (non-crossing, like LCS).
  const auto child_table = [&](std::size_t u, std::size_t v) {
    const auto& cu = a.children[u];
    const auto& cv = b.children[v];
    std::vector<std::vector<std::size_t>> dp(cu.size() + 1,
                                             std::vector<std::size_t>(cv.size() + 1, 0));
    for (std::size_t i = 1; i <= cu.size(); ++i)
      for (std::size_t j = 1; j <= cv.size(); ++j) {
        dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
        const std::size_t w = best[cu[i - 1]][cv[j - 1]];
        if (w > 0) dp[i][j] = std::max(dp[i][j], dp[i - 1][j - 1] + w);
      }
    return dp;
  };

  for (std::size_t u = n; u-- > 0;)
    for (std::size_t v = m; v-- > 0;)
      if (a.labels[u] == b.labels[v]) best[u][v] = 1 + child_table(u, v).back().back();

  std::size_t top_a = 0, top_b = 0, top_size = 0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < m; ++v)
      if (best[u][v] > top_size) {
        top_size = best[u][v];
        top_a = u;
        top_b = v;
      }
  if (top_size == 0) return result;

  const std::function<void(std::size_t, std::size_t)> trace = [&](std::size_t u, std::size_t v) {
    result.first.push_back(u);
    result.second.push_back(v);
    const auto dp = child_table(u, v);
    const auto& cu = a.children[u];
    const auto& cv = b.children[v];
    std::vector<std::pair<std::size_t, std::size_t>> matched;
    std::size_t i = cu.size(), j = cv.size();
    while (i > 0 && j > 0) {
      const std::size_t w = best[cu[i - 1]][cv[j - 1]];
      if (w > 0 && dp[i][j] == dp[i - 1][j - 1] + w) {
        matched.emplace_back(cu[i - 1], cv[j - 1]);
        --i;
        --j;
      } else if (dp[i][j] == dp[i - 1][j]) {
        --i;
      } else {
        --j;
      }
    }
    for (auto it = matched.rbegin(); it != matched.rend(); ++it) trace(it->first, it->second);
  };
  trace(top_a, top_b);
  std::sort(result.first.begin(), result.first.end());
  std::sort(result.second.begin(), result.second.end());
  return result;
}

McsResult mcs(const AttributeTree& a, const AttributeTree& b) {
  return mcs(LabeledTree::from(a), LabeledTree::from(b));
}

double mcs_score(const LabeledTree& a, const LabeledTree& b) {
  if (a.empty() || b.empty()) return 0.0;
  const double common = static_cast<double>(mcs(a, b).size());
  return 100.0 * (common / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size())));
}

double mcs_score(const AttributeTree& a, const AttributeTree& b) {
  return mcs_score(LabeledTree::from(a), LabeledTree::from(b));
}

double tree_kernel(const LabeledTree& a, const LabeledTree& b, const MetricConfig& cfg) {
  cfg.validate();
  if (a.empty() || b.empty()) return 0.0;
  ShapeTable shapes;
  const auto shape_a = shapes.assign(a);
  const auto shape_b = shapes.assign(b);
  const auto depth_a = depths(a);
  const auto depth_b = depths(b);

  std::vector<std::vector<double>> theta(a.size(), std::vector<double>(b.size(), 0.0));
  for (std::size_t u = a.size(); u-- > 0;) {
    for (std::size_t v = b.size(); v-- > 0;) {
      double value = 0.0;
      if (a.labels[u] == b.labels[v])
        for (std::size_t cu : a.children[u])
          for (std::size_t cv : b.children[v]) value += theta[cu][cv];
      if (shape_a[u] == shape_b[v]) value += 1.0;
      theta[u][v] = value;
    }
  }

  double total = 0.0;
  for (std::size_t u = 0; u < a.size(); ++u)
    for (std::size_t v = 0; v < b.size(); ++v)
      if (theta[u][v] != 0.0)
        total += theta[u][v] * theta[u][v] *
                 std::pow(cfg.tk_lambda, static_cast<double>(std::max(depth_a[u], depth_b[v])));
  return total;
}

double tree_kernel(const AttributeTree& a, const AttributeTree& b, const MetricConfig& cfg) {
  return tree_kernel(LabeledTree::from(a), LabeledTree::from(b), cfg);
}

double tk_score(const LabeledTree& a, const LabeledTree& b, const MetricConfig& cfg) {
  const double self_a = tree_kernel(a, a, cfg);
  const double self_b = tree_kernel(b, b, cfg);
  if (self_a <= 0.0 || self_b <= 0.0) {
    log_warning("tree kernel score undefined for a tree with zero self-kernel; reporting 0");
    return 0.0;
  }
  const double cross = tree_kernel(a, b, cfg);
  // sqrt(k * k) can round below k; keep identical inputs at exactly 100.
  if (cross == self_a && cross == self_b) return 100.0;
  return std::min(100.0, 100.0 * (cross / std::sqrt(self_a * self_b)));
}

double tk_score(const AttributeTree& a, const AttributeTree& b, const MetricConfig& cfg) {
  return tk_score(LabeledTree::from(a), LabeledTree::from(b), cfg);
}

double sample_mscd(const EmbeddingVector& q, const AttributeTree& explanation,
                   const EmbeddingStore& store, const DistanceConfig& dist) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& node : explanation.nodes()) {
    if (node.id == explanation.root_id()) continue;
    if (node.support.empty())
      throw DataError("explanation of '" + q.id + "': node '" + node.label +
                      "' has no support set");
    sum += set_distance(q, store.support_set(explanation, node.id), dist);
    ++count;
  }
  if (count == 0) throw DataError("explanation of '" + q.id + "' has no attribute nodes");
  return sum / static_cast<double>(count);
}

double mscd(std::span<const ExplainedSample> samples, const EmbeddingStore& store,
            const DistanceConfig& dist) {
  if (samples.empty()) throw DataError("MSCD needs at least one sample");
  double sum = 0.0;
  for (const auto& s : samples) sum += sample_mscd(s.embedding, s.explanation.tree, store, dist);
  return sum / static_cast<double>(samples.size());
}

MetricReport evaluate_pairs(std::string method, std::span<const ScoredPair> pairs,
                            const MetricConfig& cfg) {
  MetricReport report;
  report.method = std::move(method);
  for (const auto& p : pairs) {
    const auto pred = LabeledTree::from(p.predicted);
    const auto truth = LabeledTree::from(p.truth);
    report.rows.push_back({p.sample_id, static_cast<double>(ted(pred, truth)),
                           mcs_score(pred, truth), tk_score(pred, truth, cfg)});
  }
  if (!report.rows.empty()) {
    const double n = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
      report.mean_ted += r.ted;
      report.mean_mcs += r.mcs;
      report.mean_tk += r.tk;
    }
    report.mean_ted /= n;
    report.mean_mcs /= n;
    report.mean_tk /= n;
  }
  return report;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string quoted = "\"";
  for (char c : text) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

std::string report_csv(const MetricReport& report) {
  std::string out = "sample_id,ted,mcs,tk\n";
  for (const auto& r : report.rows) {
    out += csv_field(r.sample_id) + "," + format_number(r.ted) + "," + format_number(r.mcs) + "," +
           format_number(r.tk) + "\n";
  }
  return out;
}

Json report_summary(std::span<const MetricReport> reports) {
  Json models = Json::array();
  for (const auto& r : reports) {
    Json row = Json::object();
    row["model"] = r.method;
    row["ted"] = r.mean_ted;
    row["mcs"] = r.mean_mcs;
    row["tk"] = r.mean_tk;
    if (r.mscd) row["mscd"] = *r.mscd;
    row["samples"] = r.rows.size();
    models.push_back(std::move(row));
  }
  return Json{{"models", std::move(models)}};
}

}  // namespace lvx

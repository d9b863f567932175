// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lvx/baselines.hpp"
#include "lvx/config.hpp"
#include "lvx/harness.hpp"
#include "lvx/log.hpp"
#include "lvx/metrics.hpp"
#include "lvx/refinement.hpp"
#include "lvx/routing.hpp"
#include "oracles.hpp"
#include "stub_server.hpp"
#include "synthetic.hpp"
#include "workspace.hpp"

using namespace lvx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* format, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, format, value);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch(const std::string& name) {
  return fs::temp_directory_path() / ("lvx_acceptance_" + name);
}

// Each check returns its outcome; the summary text goes after the verdict.
Outcome metric_oracles() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  lvx::testing::TreeGenerator gen(2024);
  std::size_t mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    // Small alphabets make shared structure common.
    const std::size_t alphabet = 2 + i % 4;
    const auto ta = gen.tree(6, alphabet);
    const auto tb = gen.tree(6, alphabet);
    const auto a = LabeledTree::from(ta), b = LabeledTree::from(tb);
    const bool same = ted(a, b) == lvx::testing::ted_oracle(a, b) &&
                      mcs(ta, tb).size() == lvx::testing::mcs_oracle(ta, tb) &&
                      tree_kernel(a, b) == lvx::testing::tk_oracle(a, b, 0.5);
    mismatches += !same;
  }
  const double elapsed = seconds_since(start);
  out.require(mismatches == 0, std::to_string(mismatches) + " pairs disagree");
  out.require(elapsed <= 60.0, "took longer than 60 s");
  out.detail += (out.detail.empty() ? "" : "; ") + std::string("500 pairs, ") +
                std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", elapsed);
  return out;
}

Outcome normalization() {
  Outcome out;
  lvx::testing::TreeGenerator gen(77);
  double worst = 0.0;
  std::size_t bad_ted = 0, nonzero_disjoint = 0;
  for (int i = 0; i < 200; ++i) {
    const auto t = gen.tree(12, 6);
    bad_ted += ted(t, t) != 0;
    worst = std::max({worst, std::abs(mcs_score(t, t) - 100.0), std::abs(tk_score(t, t) - 100.0)});
    const auto other = gen.tree(12, 6, 'M');
    if (mcs_score(t, other) != 0.0 || tk_score(t, other) != 0.0) ++nonzero_disjoint;
  }
  out.require(bad_ted == 0, std::to_string(bad_ted) + " trees with ted(t,t) != 0");
  out.require(worst <= 1e-9, "self score off by " + fmt("%.3g", worst));
  out.require(nonzero_disjoint == 0, std::to_string(nonzero_disjoint) + " disjoint pairs above 0");
  out.detail += (out.detail.empty() ? "" : "; ") + std::string("200 trees, max self-score error ") +
                fmt("%.3g", worst) + ", disjoint pairs all 0";
  return out;
}

Outcome distance_contract() {
  Outcome out;
  const DistanceConfig cfg;
  double worst = 0.0;
  for (double s : {0.0, 1.0, 1e12}) {
    const EmbeddingVector q{"q", std::nullopt, {0.0}};
    const EmbeddingVector p{"p", std::nullopt, {std::sqrt(s)}};
    const double expected = -std::log((s + 1.0) / (s + 1e-6));
    worst = std::max(worst, std::abs(pair_distance(q, p, cfg) - expected));
  }
  out.require(worst <= 1e-6, "closed-form error " + fmt("%.3g", worst));
  out.require(std::abs(pair_distance(EmbeddingVector{"q", std::nullopt, {0.0}},
                                     EmbeddingVector{"p", std::nullopt, {0.0}}, cfg) -
                       (-13.815510557964274)) <= 1e-6,
              "identity value");

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  std::size_t disagreements = 0;
  for (int i = 0; i < 10000; ++i) {
    const double spread = std::pow(10.0, scale(rng));
    std::vector<double> q(8), p1(8), p2(8);
    for (std::size_t d = 0; d < 8; ++d) {
      q[d] = normal(rng) * spread;
      p1[d] = normal(rng) * spread;
      p2[d] = normal(rng) * spread;
    }
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t d = 0; d < 8; ++d) {
      s1 += (q[d] - p1[d]) * (q[d] - p1[d]);
      s2 += (q[d] - p2[d]) * (q[d] - p2[d]);
    }
    const double d1 = pair_distance(q, p1, cfg), d2 = pair_distance(q, p2, cfg);
    if ((s1 < s2) != (d1 < d2) || (s2 < s1) != (d2 < d1)) ++disagreements;
  }
  out.require(disagreements == 0, std::to_string(disagreements) + " triples reorder");
  out.detail += (out.detail.empty() ? "" : "; ") + std::string("max closed-form error ") +
                fmt("%.3g", worst) + ", 10000 triples, " + std::to_string(disagreements) +
                " reordered";
  return out;
}

Outcome stability_clean(const lvx::testing::GaussianFixture& f) {
  Outcome out;
  const auto ws = lvx::testing::write_workspace(scratch("stability"), f, 31, 25);
  RunConfig cfg = load_run_config(ws.config_file);
  cfg.paths.perturbed = cfg.paths.clean;
  cfg.paths.embeddings = ws.dir / "pool.jsonl";
  save_trees(cfg.paths.refined_dir, f.trees);

  const int code = run_command("stability", cfg);
  out.require(code == 0, "stability exited with " + std::to_string(code));
  if (code != 0) return out;
  const Json summary = Json::parse(read(cfg.paths.output_dir / "stability/summary.json"));
  const double m = summary["mcs"].get<double>(), t = summary["tk"].get<double>();
  std::size_t rows = 0, off = 0;
  std::istringstream csv(read(cfg.paths.output_dir / "stability/report.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    ++rows;
    off += line.substr(line.find(',')) != ",100,100";
  }
  out.require(m == 100.0 && t == 100.0, "mean " + fmt("%.17g", m) + "/" + fmt("%.17g", t));
  out.require(off == 0, std::to_string(off) + " rows below 100");
  out.detail += (out.detail.empty() ? "" : "; ") + std::to_string(rows) + " samples, MCS " +
                fmt("%g", m) + ", TK " + fmt("%g", t);
  return out;
}

double mean_mcs(const std::vector<lvx::testing::MixtureSample>& samples,
                const std::function<ExplanationTree(const lvx::testing::MixtureSample&)>& explain_one,
                const lvx::testing::GaussianFixture& f) {
  double sum = 0.0;
  for (const auto& s : samples) {
    const std::vector<NodeId> pair{s.first, s.second};
    sum += mcs_score(explain_one(s).tree, merge_paths(f.trees.at(s.category), pair).tree);
  }
  return sum / static_cast<double>(samples.size());
}

Outcome recovery_and_faithfulness(const lvx::testing::GaussianFixture& f, Outcome& faithfulness) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1234);
  const auto test = lvx::testing::mixture_samples(f, 200, rng, "test-");
  const RoutingConfig route{2};
  const DistanceConfig dist;

  const auto lvx_explain = [&](const lvx::testing::MixtureSample& s) {
    return explain(s.embedding, s.category, f.trees, f.supports, route, dist);
  };
  const auto random_explain = [&](const lvx::testing::MixtureSample& s) {
    return random_baseline(f.trees.at(s.category), route.k, sample_seed(5, s.embedding.id));
  };
  const auto constant_explain = [&](const lvx::testing::MixtureSample& s) {
    return constant_baseline(s.category, f.trees);
  };
  const double lvx_mcs = mean_mcs(test, lvx_explain, f);
  const double random_mcs = mean_mcs(test, random_explain, f);
  const double constant_mcs = mean_mcs(test, constant_explain, f);
  out.require(lvx_mcs >= 90.0, "LVX MCS below 90");
  out.require(lvx_mcs > random_mcs, "LVX not above Random");
  out.require(lvx_mcs > constant_mcs, "LVX not above Constant");

  // Refinement from padded trees: spurious leaves have support but no mass.
  const auto train = lvx::testing::node_samples(f, 30, rng, "train-");
  lvx::testing::StubLlmServer server([&](const std::string& prompt) {
    return lvx::testing::fixture_reply(f, prompt);
  });
  LiveOptions options;
  options.base_url = server.base_url();
  options.retry_backoff = std::chrono::milliseconds(1);
  auto llm = LlmClient::live(options);
  lvx::testing::SyntheticSupportSource source(f, 8);
  RefinementConfig cfg;
  cfg.t_max = 2;
  const RefineResult refined = refine(f.padded, train, f.supports, llm, source, cfg, dist);
  std::size_t left = 0;
  for (const auto& c : f.categories)
    for (const auto& label : f.spurious.at(c)) left += refined.trees.at(c).find(label).has_value();
  out.require(left == 0, std::to_string(left) + " spurious nodes survive 2 iterations");

  const auto refined_explain = [&](const lvx::testing::MixtureSample& s) {
    return explain(s.embedding, s.category, refined.trees, refined.store, route, dist);
  };
  const double refined_mcs = mean_mcs(test, refined_explain, f);
  const double elapsed = seconds_since(start);
  out.require(elapsed <= 120.0, "took longer than 120 s");
  out.detail += (out.detail.empty() ? "" : "; ") + std::string("MCS LVX ") + fmt("%.2f", lvx_mcs) +
                ", Random " + fmt("%.2f", random_mcs) + ", Constant " + fmt("%.2f", constant_mcs) +
                ", spurious left " + std::to_string(left) + ", refined-tree LVX " +
                fmt("%.2f", refined_mcs) + " (informational), " + fmt("%.2f s", elapsed);

  std::vector<ExplainedSample> lvx_set, random_set;
  for (const auto& s : test) {
    lvx_set.push_back({s.embedding, lvx_explain(s)});
    random_set.push_back({s.embedding, random_explain(s)});
  }
  const double lvx_mscd = mscd(lvx_set, f.supports, dist);
  const double random_mscd = mscd(random_set, f.supports, dist);
  faithfulness.require(lvx_mscd + 0.1 <= random_mscd, "margin below 0.1");
  faithfulness.detail += (faithfulness.detail.empty() ? "" : "; ") + std::string("MSCD LVX ") +
                         fmt("%.4f", lvx_mscd) + ", Random " + fmt("%.4f", random_mscd) +
                         ", margin " + fmt("%.4f", random_mscd - lvx_mscd);
  return out;
}

Outcome determinism(const lvx::testing::GaussianFixture& f) {
  Outcome out;
  const auto ws = lvx::testing::write_workspace(scratch("determinism"), f, 47, 20);
  RunConfig cfg = load_run_config(ws.config_file);
  {
    lvx::testing::StubLlmServer server([&](const std::string& prompt) {
      return lvx::testing::fixture_reply(f, prompt);
    });
    ::setenv("LVX_LLM_BASE_URL", server.base_url().c_str(), 1);
    RunConfig live = cfg;
    live.llm_mode = LlmMode::Live;
    const bool recorded = run_command("build-tree", live) == 0 && run_command("refine", live) == 0;
    ::unsetenv("LVX_LLM_BASE_URL");
    out.require(recorded, "recording the transcript failed");
    if (!recorded) return out;
  }
  const char* steps[] = {"build-tree", "refine", "explain", "baseline", "evaluate", "stability", "export-dot"};
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(cfg.paths.output_dir);
    for (const char* step : steps) {
      const int code = run_command(step, cfg);
      out.require(code == 0, std::string(step) + " exited with " + std::to_string(code));
    }
    runs.push_back(lvx::testing::snapshot(cfg.paths.output_dir));
  }
  std::size_t differing = 0;
  for (const auto& [file, bytes] : runs[0]) {
    const auto it = runs[1].find(file);
    differing += it == runs[1].end() || it->second != bytes;
  }
  differing += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
  out.require(differing == 0, std::to_string(differing) + " files differ");
  out.require(runs[0].count("refined/k0.json") && runs[0].count("report/summary.json"),
              "expected outputs missing");
  out.detail += (out.detail.empty() ? "" : "; ") + std::to_string(runs[0].size()) +
                " files compared, " + std::to_string(differing) + " differ";
  return out;
}

Outcome multilabel(const lvx::testing::GaussianFixture& f) {
  Outcome out;
  std::vector<AttributeTree> findings;
  for (const auto& c : f.categories) findings.push_back(f.trees.at(c));
  const EmbeddingVector q{"q", std::nullopt, f.centers.at("k0/k0 b")};

  const auto none = explain_multilabel(q, {std::vector<int>(findings.size(), 0)}, findings,
                                       f.supports, {2}, {});
  out.require(none.tree.size() == 1 && none.tree.category() == "No Findings",
              "all-zero flags do not give the single No Findings node");

  std::mt19937_64 rng(3);
  std::size_t checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> flags(findings.size());
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      flags[i] = static_cast<int>(rng() % 2);
      if (flags[i]) expected.push_back(f.categories[i]);
    }
    if (expected.empty()) continue;
    const auto e = explain_multilabel(q, {flags}, findings, f.supports, {2}, {});
    std::vector<std::string> children;
    for (NodeId c : e.tree.node(0).children) children.push_back(e.tree.node(c).label);
    out.require(e.tree.category() == "has Findings" && children == expected,
                "wrong children for trial " + std::to_string(trial));
    ++checked;
  }
  const auto chain = explain_multilabel(q, {{1, 0, 0, 0}}, findings, f.supports, {1}, {});
  out.require(chain.tree.size() == 3, "one finding with k=1 is not a 3-node chain");
  out.detail += (out.detail.empty() ? "" : "; ") + std::to_string(checked) +
                " positive flag vectors, root children match";
  return out;
}

}  // namespace

int main() {
  set_log_sink([](LogLevel, std::string_view) {});
  const auto f = lvx::testing::make_gaussian_fixture(20240601, 4);

  std::vector<std::pair<std::string, Outcome>> results;
  const auto run = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("threw: ") + e.what();
    }
    std::printf("%s %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    results.emplace_back(name, outcome);
  };

  run("metric oracle equivalence", metric_oracles);
  run("normalization identities", normalization);
  run("distance contract", distance_contract);
  run("stability clean row", [&] { return stability_clean(f); });
  Outcome faithfulness;
  run("synthetic end-to-end recovery", [&] { return recovery_and_faithfulness(f, faithfulness); });
  run("faithfulness direction", [&] {
    if (faithfulness.detail.empty()) faithfulness.require(false, "not computed");
    return faithfulness;
  });
  run("determinism", [&] { return determinism(f); });
  run("multi-label composition", [&] { return multilabel(f); });

  std::size_t failed = 0;
  for (const auto& [name, outcome] : results) failed += !outcome.pass;
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

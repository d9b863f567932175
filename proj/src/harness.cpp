#include "lvx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "lvx/baselines.hpp"
#include "lvx/errors.hpp"
#include "lvx/log.hpp"

namespace lvx {
namespace fs = std::filesystem;
namespace {

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

const fs::path& require(const fs::path& path, const std::string& key) {
  if (path.empty()) throw ValidationError(key, "not set in the config");
  if (!fs::exists(path)) throw ValidationError(key, "no such path: " + path.string());
  return path;
}

void require_classes(const RunConfig& config) {
  if (config.classes.empty()) throw ValidationError("classes", "no classes configured");
}

std::string in_context_example(const RunConfig& config) {
  if (config.paths.in_context_example.empty()) return std::string(default_in_context_example());
  return read_text(require(config.paths.in_context_example, "paths.in_context_example"));
}

fs::path transcript_path(const RunConfig& config) {
  return config.paths.transcript.empty() ? config.paths.output_dir / "transcript.jsonl"
                                         : config.paths.transcript;
}

LlmClient make_client(const RunConfig& config) {
  if (config.llm_mode == LlmMode::Replay)
    return LlmClient::replay(Transcript::load(require(config.paths.transcript, "paths.transcript")));
  LiveOptions options = LiveOptions::from_env();
  options.max_in_flight = static_cast<int>(config.max_in_flight);
  options.max_retries = static_cast<int>(config.max_retries);
  const fs::path path = transcript_path(config);
  Transcript recorded = fs::exists(path) ? Transcript::load(path) : Transcript{};
  return LlmClient::live(std::move(options), std::move(recorded));
}

// Persists what a live run recorded and returns the digest of the transcript used.
std::string finish_client(const RunConfig& config, const LlmClient& llm) {
  const Transcript transcript = llm.transcript();
  if (llm.mode() == LlmMode::Live) {
    const fs::path path = transcript_path(config);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    transcript.save(path);
    return file_digest(path);
  }
  return file_digest(config.paths.transcript);
}

EmbeddingStore load_optional_store(const fs::path& path) {
  return path.empty() ? EmbeddingStore{} : load_embeddings(require(path, "paths.embeddings"));
}

fs::path supports_path(const RunConfig& config) {
  return config.paths.refined_dir / "supports.jsonl";
}

// Base embeddings plus the supports fetched during refinement.
EmbeddingStore routing_store(const RunConfig& config) {
  EmbeddingStore store = load_optional_store(config.paths.embeddings);
  if (fs::exists(supports_path(config))) {
    EmbeddingStore extra = load_embeddings(supports_path(config));
    store = store.empty() ? std::move(extra) : store.merged(extra);
  }
  return store;
}

fs::path manifest_beside(const fs::path& file) {
  fs::path out = file;
  out.replace_extension(".manifest.json");
  return out;
}

std::string list_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size() - shown) + " more)";
  return out;
}

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string dot_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default: out += c;
    }
  }
  return out;
}

std::string file_stem_for(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += safe ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void check_category_name(const std::string& category) {
  if (category.find_first_of("/\\") != std::string::npos || category == "." || category == "..")
    throw ValidationError("classes", "class '" + category + "' cannot name a file");
}

std::map<std::string, const ExplanationRecord*, std::less<>> index_by_id(
    std::span<const ExplanationRecord> records, const std::string& what) {
  std::map<std::string, const ExplanationRecord*, std::less<>> out;
  for (const auto& r : records)
    if (!out.emplace(r.sample_id, &r).second)
      throw ValidationError(what, "duplicate sample id '" + r.sample_id + "'");
  return out;
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max<unsigned>(1, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<LabeledSample> load_labeled_samples(const fs::path& path) {
  const EmbeddingStore store = load_embeddings(path);
  std::vector<LabeledSample> out;
  out.reserve(store.size());
  for (const auto& v : store.vectors()) {
    if (!v.label || v.label->empty())
      throw DataError(path.string() + ": sample '" + v.id + "' has no category label");
    out.push_back({v, *v.label});
  }
  return out;
}

TreeMap load_trees(const fs::path& dir, std::span<const std::string> classes) {
  TreeMap trees;
  std::vector<std::string> missing;
  for (const auto& c : classes) {
    check_category_name(c);
    const fs::path file = dir / (c + ".json");
    if (!fs::exists(file)) {
      missing.push_back(c);
      continue;
    }
    AttributeTree tree = parse_tree(read_text(file));
    if (tree.category() != c)
      throw ValidationError(file.string(), "root is '" + tree.category() + "', expected '" + c + "'");
    trees.emplace(c, std::move(tree));
  }
  if (!missing.empty())
    throw DataError("no tree file in " + dir.string() + " for: " + list_ids(missing));
  return trees;
}

std::vector<fs::path> save_trees(const fs::path& dir, const TreeMap& trees) {
  std::vector<fs::path> written;
  for (const auto& [category, tree] : trees) {
    check_category_name(category);
    const fs::path file = dir / (category + ".json");
    write_text(file, serialize_tree(tree, 2) + "\n");
    written.push_back(file);
  }
  return written;
}

std::vector<std::pair<std::string, AttributeTree>> load_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth " + path.string());
  std::vector<std::pair<std::string, AttributeTree>> out;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json value;
    try {
      value = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what(), e.byte);
    }
    if (!value.is_object() || !value.contains("sample_id") || !value.contains("tree") ||
        !value["sample_id"].is_string())
      throw ValidationError(where, "expected {\"sample_id\": string, \"tree\": object}");
    std::string id = value["sample_id"].get<std::string>();
    if (!seen.insert(id).second) throw ValidationError(where, "duplicate sample id '" + id + "'");
    out.emplace_back(std::move(id), tree_from_json(value["tree"]));
  }
  return out;
}

std::vector<ExplanationRecord> explain_all(std::span<const LabeledSample> samples,
                                           const TreeMap& trees, const EmbeddingStore& store,
                                           const RoutingConfig& route,
                                           const DistanceConfig& dist) {
  std::vector<std::optional<ExplanationRecord>> slots(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = samples[i];
    slots[i] = ExplanationRecord{s.embedding.id, s.category, "lvx",
                                 explain(s.embedding, s.category, trees, store, route, dist)};
  });
  std::vector<ExplanationRecord> out;
  out.reserve(slots.size());
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

StabilityReport compare_stability(std::span<const ExplanationRecord> clean,
                                  std::span<const ExplanationRecord> perturbed,
                                  const MetricConfig& metrics) {
  const auto clean_by_id = index_by_id(clean, "clean");
  const auto perturbed_by_id = index_by_id(perturbed, "perturbed");
  std::vector<std::string> unpaired;
  for (const auto& [id, r] : clean_by_id)
    if (!perturbed_by_id.count(id)) unpaired.push_back(id);
  for (const auto& [id, r] : perturbed_by_id)
    if (!clean_by_id.count(id)) unpaired.push_back(id);
  if (!unpaired.empty()) throw DataError("unpaired sample ids: " + list_ids(unpaired));

  StabilityReport report;
  report.rows.resize(clean.size());
  parallel_for(clean.size(), [&](std::size_t i) {
    const auto& a = clean[i].explanation.tree;
    const auto& b = perturbed_by_id.at(clean[i].sample_id)->explanation.tree;
    report.rows[i] = {clean[i].sample_id, mcs_score(a, b), tk_score(a, b, metrics)};
  });
  for (const auto& row : report.rows) {
    report.mean_mcs += row.mcs;
    report.mean_tk += row.tk;
  }
  if (!report.rows.empty()) {
    report.mean_mcs /= static_cast<double>(report.rows.size());
    report.mean_tk /= static_cast<double>(report.rows.size());
  }
  return report;
}

std::string tree_to_dot(const AttributeTree& tree, std::string_view graph_name) {
  std::string out = "digraph \"" + dot_escape(graph_name) + "\" {\n  node [shape=box];\n";
  for (const auto& node : tree.nodes()) {
    out += "  n" + std::to_string(node.id) + " [label=\"" + dot_escape(node.label) + "\"";
    if (node.id == tree.root_id()) out += ", shape=doubleoctagon";
    out += "];\n";
  }
  for (const auto& node : tree.nodes())
    for (NodeId child : node.children)
      out += "  n" + std::to_string(node.id) + " -> n" + std::to_string(child) + ";\n";
  out += "}\n";
  return out;
}

std::string file_digest(const fs::path& path) { return fnv1a_hex(read_text(path)); }

Json manifest_to_json(const Manifest& m) {
  Json out = Json::object();
  out["command"] = m.command;
  if (m.config) {
    out["config_digest"] = m.config->digest;
    out["seed"] = m.config->seed;
    out["llm_mode"] = std::string(to_string(m.config->llm_mode));
  }
  out["transcript_digest"] = m.transcript_digest ? Json(*m.transcript_digest) : Json(nullptr);
  Json inputs = Json::object();
  for (const auto& [name, path] : m.inputs)
    inputs[name] = Json{{"path", path.generic_string()}, {"digest", file_digest(path)}};
  out["inputs"] = std::move(inputs);
  Json outputs = Json::array();
  for (const auto& p : m.outputs) outputs.push_back(p.filename().generic_string());
  out["outputs"] = std::move(outputs);
  for (const auto& [key, value] : m.extra.items()) out[key] = value;
  return out;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  write_text(path, manifest_to_json(manifest).dump(2) + "\n");
}

void cmd_build_tree(const RunConfig& config) {
  require_classes(config);
  LlmClient llm = make_client(config);
  const std::string example = in_context_example(config);
  std::vector<std::optional<AttributeTree>> built(config.classes.size());
  parallel_for(config.classes.size(), [&](std::size_t i) {
    try {
      built[i] = build_initial_tree(config.classes[i], llm, example);
    } catch (const LlmError& e) {
      throw LlmError("class '" + config.classes[i] + "': " + e.what(), e.retryable());
    }
  });
  TreeMap trees;
  for (std::size_t i = 0; i < built.size(); ++i) trees.emplace(config.classes[i], std::move(*built[i]));

  Manifest manifest{"build-tree", &config, finish_client(config, llm), {}, {}, {}};
  manifest.outputs = save_trees(config.paths.trees_dir, trees);
  manifest.extra["categories"] = config.classes;
  write_manifest(config.paths.trees_dir / "manifest.json", manifest);
}

void cmd_refine(const RunConfig& config) {
  require_classes(config);
  const TreeMap initial = load_trees(config.paths.trees_dir, config.classes);
  const EmbeddingStore store = load_optional_store(config.paths.embeddings);
  const auto train = load_labeled_samples(require(config.paths.train, "paths.train"));
  PoolSupportSource pool(config.paths.support_pool.empty()
                             ? EmbeddingStore{}
                             : load_embeddings(require(config.paths.support_pool,
                                                       "paths.support_pool")));
  LlmClient llm = make_client(config);
  RefinementConfig refine_cfg = config.refine;
  refine_cfg.in_context_example = in_context_example(config);

  RefineResult result = refine(initial, train, store, llm, pool, refine_cfg, config.distance);

  Manifest manifest{"refine", &config, finish_client(config, llm), {}, {}, {}};
  manifest.outputs = save_trees(config.paths.refined_dir, result.trees);

  std::vector<EmbeddingVector> fetched;
  for (const auto& v : result.store.vectors())
    if (!store.find(v.id)) fetched.push_back(v);
  write_embeddings(supports_path(config), fetched);
  manifest.outputs.push_back(supports_path(config));

  std::string log_text;
  for (const auto& line : result.log) log_text += line + "\n";
  write_text(config.paths.refined_dir / "refine.log", log_text);
  manifest.outputs.push_back(config.paths.refined_dir / "refine.log");

  manifest.inputs.emplace_back("train", config.paths.train);
  if (!config.paths.embeddings.empty()) manifest.inputs.emplace_back("embeddings", config.paths.embeddings);
  if (!config.paths.support_pool.empty())
    manifest.inputs.emplace_back("support_pool", config.paths.support_pool);
  manifest.extra["categories"] = config.classes;
  manifest.extra["t_max"] = config.refine.t_max;
  manifest.extra["prune_count"] = config.refine.prune_count;
  manifest.extra["grow_count"] = config.refine.grow_count;
  manifest.extra["epsilon"] = config.distance.epsilon;
  manifest.extra["transcript"] = transcript_path(config).generic_string();
  write_manifest(config.paths.refined_dir / "manifest.json", manifest);
}

void cmd_explain(const RunConfig& config) {
  require_classes(config);
  const TreeMap trees = load_trees(config.paths.refined_dir, config.classes);
  const EmbeddingStore store = routing_store(config);
  const auto test = load_labeled_samples(require(config.paths.test, "paths.test"));
  const auto records = explain_all(test, trees, store, config.route, config.distance);
  write_explanations(config.paths.explanations, records);

  Manifest manifest{"explain", &config, std::nullopt, {{"test", config.paths.test}}, {config.paths.explanations}, {}};
  manifest.extra["k"] = config.route.k;
  manifest.extra["epsilon"] = config.distance.epsilon;
  write_manifest(manifest_beside(config.paths.explanations), manifest);
}

void cmd_baseline(const RunConfig& config) {
  require_classes(config);
  const auto test = load_labeled_samples(require(config.paths.test, "paths.test"));
  const fs::path dir = config.paths.output_dir / "baselines";
  Manifest manifest{"baseline", &config, std::nullopt, {{"test", config.paths.test}}, {}, {}};

  for (const BaselineKind kind : config.baselines) {
    std::vector<std::optional<ExplanationRecord>> slots(test.size());
    const std::string method(to_string(kind));
    const auto put = [&](std::size_t i, ExplanationTree e) {
      e.source_sample = test[i].embedding.id;
      slots[i] = ExplanationRecord{test[i].embedding.id, test[i].category, method, std::move(e)};
    };
    switch (kind) {
      case BaselineKind::Random: {
        const TreeMap trees = load_trees(config.paths.refined_dir, config.classes);
        parallel_for(test.size(), [&](std::size_t i) {
          const auto it = trees.find(test[i].category);
          if (it == trees.end())
            throw DataError("sample '" + test[i].embedding.id + "': no tree for '" +
                            test[i].category + "'");
          put(i, random_baseline(it->second, config.random_nodes,
                                 sample_seed(config.seed, test[i].embedding.id)));
        });
        break;
      }
      case BaselineKind::Constant: {
        const TreeMap initial = load_trees(config.paths.trees_dir, config.classes);
        for (std::size_t i = 0; i < test.size(); ++i) {
          put(i, constant_baseline(test[i].category, initial));
        }
        break;
      }
      case BaselineKind::Subtree: {
        const TreeMap trees = load_trees(config.paths.refined_dir, config.classes);
        const EmbeddingStore store = routing_store(config);
        const auto held_out =
            load_labeled_samples(require(config.paths.held_out, "paths.held_out"));
        std::map<std::string, ExplanationTree, std::less<>> per_category;
        for (const auto& s : test)
          if (!per_category.count(s.category))
            per_category.emplace(s.category, subtree_baseline(s.category, held_out, trees, store,
                                                              config.route, config.distance));
        for (std::size_t i = 0; i < test.size(); ++i) {
          put(i, per_category.at(test[i].category));
        }
        manifest.inputs.emplace_back("held_out", config.paths.held_out);
        break;
      }
    }
    std::vector<ExplanationRecord> records;
    for (auto& slot : slots) records.push_back(std::move(*slot));
    const fs::path file = dir / (method + ".jsonl");
    fs::create_directories(dir);
    write_explanations(file, records);
    manifest.outputs.push_back(file);
  }
  manifest.extra["random_nodes"] = config.random_nodes;
  manifest.extra["k"] = config.route.k;
  write_manifest(dir / "manifest.json", manifest);
}

void cmd_evaluate(const RunConfig& config) {
  const auto truth = load_ground_truth(require(config.paths.ground_truth, "paths.ground_truth"));
  std::map<std::string, const AttributeTree*, std::less<>> truth_by_id;
  for (const auto& [id, tree] : truth) truth_by_id.emplace(id, &tree);

  std::vector<std::pair<std::string, fs::path>> sources{
      {"lvx", require(config.paths.explanations, "paths.explanations")}};
  for (const BaselineKind kind : config.baselines) {
    const std::string method(to_string(kind));
    const fs::path file = config.paths.output_dir / "baselines" / (method + ".jsonl");
    if (!fs::exists(file))
      throw DataError("baseline '" + method + "' is enabled but " + file.string() +
                      " is missing; run the baseline command first");
    sources.emplace_back(method, file);
  }

  std::map<std::string, const LabeledSample*, std::less<>> test_by_id;
  std::vector<LabeledSample> test;
  EmbeddingStore store;
  const bool with_mscd = !config.paths.test.empty() && fs::exists(config.paths.test);
  if (with_mscd) {
    test = load_labeled_samples(config.paths.test);
    for (const auto& s : test) test_by_id.emplace(s.embedding.id, &s);
    store = routing_store(config);
  }

  const fs::path dir = config.paths.output_dir / "report";
  Manifest manifest{"evaluate", &config, std::nullopt, {{"ground_truth", config.paths.ground_truth}}, {}, {}};
  std::vector<MetricReport> reports;
  std::string unmatched_text;
  for (const auto& [method, file] : sources) {
    const auto records = load_explanations(file);
    manifest.inputs.emplace_back(method, file);
    std::vector<ScoredPair> pairs;
    std::vector<std::string> unmatched;
    for (const auto& r : records) {
      const auto it = truth_by_id.find(r.sample_id);
      if (it == truth_by_id.end()) unmatched.push_back(r.sample_id);
      else pairs.push_back({r.sample_id, r.explanation.tree, *it->second});
    }
    std::set<std::string, std::less<>> predicted;
    for (const auto& r : records) predicted.insert(r.sample_id);
    for (const auto& [id, tree] : truth)
      if (!predicted.count(id)) unmatched.push_back(id);
    if (pairs.empty()) {
      std::vector<std::string> ids;
      for (const auto& r : records) ids.push_back(r.sample_id);
      throw DataError(method + ": no prediction matches a ground-truth id; predictions: " +
                      list_ids(ids));
    }
    if (!unmatched.empty()) {
      log_warning(method + ": " + std::to_string(unmatched.size()) + " unmatched sample ids");
      for (const auto& id : unmatched) unmatched_text += method + "," + id + "\n";
    }

    MetricReport report = evaluate_pairs(method, pairs, config.metrics);
    if (with_mscd) {
      try {
        std::vector<ExplainedSample> explained;
        for (const auto& r : records)
          if (const auto t = test_by_id.find(r.sample_id); t != test_by_id.end())
            explained.push_back({t->second->embedding, r.explanation});
        if (!explained.empty()) report.mscd = mscd(explained, store, config.distance);
      } catch (const DataError& e) {
        log_warning(method + ": MSCD skipped: " + e.what());
      }
    }
    const fs::path csv = dir / (method + ".csv");
    write_text(csv, report_csv(report));
    manifest.outputs.push_back(csv);
    reports.push_back(std::move(report));
  }
  const fs::path summary = dir / "summary.json";
  write_text(summary, report_summary(reports).dump(2) + "\n");
  manifest.outputs.push_back(summary);
  if (!unmatched_text.empty()) {
    write_text(dir / "unmatched.csv", "method,sample_id\n" + unmatched_text);
    manifest.outputs.push_back(dir / "unmatched.csv");
  }
  if (with_mscd) manifest.inputs.emplace_back("test", config.paths.test);
  write_manifest(dir / "manifest.json", manifest);
}

void cmd_stability(const RunConfig& config) {
  require_classes(config);
  const TreeMap trees = load_trees(config.paths.refined_dir, config.classes);
  const EmbeddingStore store = routing_store(config);
  const auto clean = load_labeled_samples(require(config.paths.clean, "paths.clean"));
  const auto perturbed = load_labeled_samples(require(config.paths.perturbed, "paths.perturbed"));
  const auto clean_records = explain_all(clean, trees, store, config.route, config.distance);
  const auto perturbed_records = explain_all(perturbed, trees, store, config.route, config.distance);
  const StabilityReport report = compare_stability(clean_records, perturbed_records, config.metrics);

  const fs::path dir = config.paths.output_dir / "stability";
  std::string csv = "sample_id,mcs,tk\n";
  for (const auto& row : report.rows)
    csv += csv_field(row.sample_id) + "," + format_number(row.mcs) + "," + format_number(row.tk) + "\n";
  write_text(dir / "report.csv", csv);

  Json summary = Json::object();
  summary["mcs"] = report.mean_mcs;
  summary["tk"] = report.mean_tk;
  summary["samples"] = report.rows.size();
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  Manifest manifest{"stability", &config, std::nullopt,
                    {{"clean", config.paths.clean}, {"perturbed", config.paths.perturbed}},
                    {dir / "report.csv", dir / "summary.json"}, {}};
  manifest.extra["k"] = config.route.k;
  write_manifest(dir / "manifest.json", manifest);
}

void cmd_export_dot(const RunConfig& config, const std::optional<fs::path>& input) {
  const fs::path source = input ? *input : config.paths.explanations;
  const auto records = load_explanations(require(source, "input"));
  const fs::path dir = config.paths.output_dir / "dot";
  Manifest manifest{"export-dot", &config, std::nullopt, {{"input", source}}, {}, {}};
  std::map<std::string, std::size_t> used;
  for (const auto& r : records) {
    std::string stem = file_stem_for(r.sample_id);
    if (r.method != "lvx") stem += "." + file_stem_for(r.method);
    const std::size_t n = ++used[stem];
    if (n > 1) stem += "-" + std::to_string(n);
    const fs::path file = dir / (stem + ".dot");
    write_text(file, tree_to_dot(r.explanation.tree, r.sample_id));
    manifest.outputs.push_back(file);
  }
  write_manifest(dir / "manifest.json", manifest);
}

int run_command(std::string_view name, const RunConfig& config,
                const std::optional<fs::path>& input) {
  try {
    if (name == "build-tree") cmd_build_tree(config);
    else if (name == "refine") cmd_refine(config);
    else if (name == "explain") cmd_explain(config);
    else if (name == "baseline") cmd_baseline(config);
    else if (name == "evaluate") cmd_evaluate(config);
    else if (name == "stability") cmd_stability(config);
    else if (name == "export-dot") cmd_export_dot(config, input);
    else throw ValidationError("command", "unknown command '" + std::string(name) + "'");
    return 0;
  } catch (const Error& e) {
    log_warning(std::string(name) + ": " + e.what());
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    log_warning(std::string(name) + ": malformed JSON content: " + e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    log_warning(std::string(name) + ": " + e.what());
    return 3;
  }
}

}  // namespace lvx

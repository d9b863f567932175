#pragma once

#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvx/config.hpp"
#include "lvx/metrics.hpp"
#include "lvx/refinement.hpp"
#include "lvx/routing.hpp"

namespace lvx {

/// Runs `body(i)` for every i in [0, n) on up to hardware_concurrency threads.
/// Each index is visited once; the first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Embeddings whose `label` is the category (training data) or the predicted
/// category (test data). Throws DataError for a record without a label.
std::vector<LabeledSample> load_labeled_samples(const std::filesystem::path& path);

/// `<dir>/<class>.json` for every class. Throws DataError naming missing files.
TreeMap load_trees(const std::filesystem::path& dir, std::span<const std::string> classes);
/// Pretty-printed JSON, one file per category. Returns the written paths.
std::vector<std::filesystem::path> save_trees(const std::filesystem::path& dir,
                                              const TreeMap& trees);

/// Ground-truth file: JSONL of `{"sample_id": ..., "tree": {...}}`.
std::vector<std::pair<std::string, AttributeTree>> load_ground_truth(
    const std::filesystem::path& path);

/// Explains every sample in order; the work is spread over threads.
std::vector<ExplanationRecord> explain_all(std::span<const LabeledSample> samples,
                                           const TreeMap& trees, const EmbeddingStore& store,
                                           const RoutingConfig& route,
                                           const DistanceConfig& dist);

struct StabilityRow {
  std::string sample_id;
  double mcs = 0.0;
  double tk = 0.0;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double mean_mcs = 0.0;
  double mean_tk = 0.0;
};

/// MCS and TK scores between the explanations of each clean sample and its
/// perturbed twin (joined by id). Throws DataError listing unpaired ids.
StabilityReport compare_stability(std::span<const ExplanationRecord> clean,
                                  std::span<const ExplanationRecord> perturbed,
                                  const MetricConfig& metrics);

/// Graphviz digraph with one node per tree node and one edge per parent link.
/// Labels are escaped for DOT quoted strings and the root is drawn as a double octagon.
std::string tree_to_dot(const AttributeTree& tree, std::string_view graph_name);

/// Digest-based record of one command invocation; written as `manifest.json`
/// (or `<stem>.manifest.json`) beside the command's outputs.
struct Manifest {
  std::string command;
  const RunConfig* config = nullptr;
  std::optional<std::string> transcript_digest;
  /// Digest of every input file, keyed by config name.
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;
  std::vector<std::filesystem::path> outputs;
  Json extra = Json::object();
};

Json manifest_to_json(const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Digest of a file's bytes. Throws DataError when unreadable.
std::string file_digest(const std::filesystem::path& path);

// Commands. Each validates the paths it needs, writes its outputs under the
// configured locations and leaves a manifest beside them.
void cmd_build_tree(const RunConfig& config);
void cmd_refine(const RunConfig& config);
void cmd_explain(const RunConfig& config);
void cmd_baseline(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_stability(const RunConfig& config);
/// Reads `input`, or the configured explanation file when absent.
void cmd_export_dot(const RunConfig& config,
                    const std::optional<std::filesystem::path>& input = std::nullopt);

/// Dispatches by CLI name ("build-tree", "refine", ...). Returns the exit code:
/// 0 on success, otherwise the code of the error that stopped the run.
int run_command(std::string_view name, const RunConfig& config,
                const std::optional<std::filesystem::path>& input = std::nullopt);

}  // namespace lvx

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lvx/baselines.hpp"
#include "lvx/embedding.hpp"
#include "lvx/llm.hpp"
#include "lvx/metrics.hpp"
#include "lvx/refinement.hpp"
#include "lvx/routing.hpp"

namespace lvx {

/// Input and output locations. Relative paths in the config file resolve
/// against the file's directory. Unset optional inputs stay empty.
struct RunPaths {
  std::filesystem::path output_dir;
  std::filesystem::path trees_dir;
  std::filesystem::path refined_dir;
  std::filesystem::path explanations;
  std::filesystem::path embeddings;
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path held_out;
  std::filesystem::path support_pool;
  std::filesystem::path ground_truth;
  std::filesystem::path transcript;
  std::filesystem::path in_context_example;
  std::filesystem::path clean;
  std::filesystem::path perturbed;
};

struct RunConfig {
  std::vector<std::string> classes;
  RunPaths paths;
  RefinementConfig refine;
  RoutingConfig route;
  DistanceConfig distance;
  MetricConfig metrics;
  std::vector<BaselineKind> baselines{BaselineKind::Random, BaselineKind::Constant,
                                      BaselineKind::Subtree};
  std::size_t random_nodes = 5;
  LlmMode llm_mode = LlmMode::Replay;
  std::size_t max_in_flight = 4;
  std::size_t max_retries = 3;
  std::uint64_t seed = 0;
  /// FNV-1a digest of the config text and every applied override.
  std::string digest;

  /// Range checks on numeric settings. Throws ValidationError.
  void validate() const;
};

/// Parses the TOML-style subset used by run configs: `[section]` headers,
/// `key = value` lines, `#` comments, and JSON-compatible values (strings,
/// numbers, booleans, arrays, which may span lines). Unknown keys are errors.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct ConfigOverrides {
  std::optional<std::size_t> k;
  std::optional<std::size_t> t_max;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  /// Forces replay mode from this transcript.
  std::optional<std::filesystem::path> replay;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace lvx

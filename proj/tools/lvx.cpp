// Command-line front end: `lvx <command> --config <file> [overrides]`.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lvx/config.hpp"
#include "lvx/errors.hpp"
#include "lvx/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tree-structured visual explanations over embedding support sets"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::size_t> k, t_max;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> replay, input;

  const std::pair<const char*, const char*> commands[] = {
      {"build-tree", "Generate the initial tree of every class"},
      {"refine", "Prune and grow trees against training embeddings"},
      {"explain", "Explain every test sample with its predicted class tree"},
      {"baseline", "Write the enabled baseline explanations"},
      {"evaluate", "Score explanations against ground-truth trees"},
      {"stability", "Compare explanations of clean and perturbed embeddings"},
      {"export-dot", "Render explanations as Graphviz DOT files"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Run config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--k", k, "Nodes selected per explanation");
    sub->add_option("--t-max", t_max, "Refinement iterations");
    sub->add_option("--epsilon", epsilon, "Distance stabilizer");
    sub->add_option("--seed", seed, "Run seed");
    sub->add_option("--replay", replay, "Replay LLM answers from this transcript");
    if (std::string(name) == "export-dot")
      sub->add_option("--input", input, "Explanation JSONL (default: configured file)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  lvx::RunConfig config;
  try {
    config = lvx::load_run_config(config_path);
    lvx::ConfigOverrides overrides{k, t_max, epsilon, seed, std::nullopt};
    if (replay) overrides.replay = std::filesystem::absolute(*replay);
    lvx::apply_overrides(config, overrides);
  } catch (const lvx::Error& e) {
    std::cerr << "lvx: " << e.what() << '\n';
    return e.exit_code();
  }

  std::optional<std::filesystem::path> input_path;
  if (input) input_path = *input;
  return lvx::run_command(app.get_subcommands().front()->get_name(), config, input_path);
}

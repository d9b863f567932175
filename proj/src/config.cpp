#include "lvx/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "lvx/errors.hpp"

namespace lvx {
namespace {

// Drops a trailing `#` comment, ignoring `#` inside double-quoted strings.
std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

int bracket_balance(std::string_view text) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string && c == '\\') ++i;
    else if (c == '"') in_string = !in_string;
    else if (!in_string && c == '[') ++depth;
    else if (!in_string && c == ']') --depth;
  }
  return depth;
}

// TOML permits a trailing comma before `]`; JSON does not.
std::string drop_trailing_commas(std::string text) {
  std::string out;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) out += text[++i];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && text[j] == ']') continue;
    }
    out += c;
  }
  return out;
}

std::map<std::string, std::pair<Json, std::size_t>> parse_entries(std::string_view text) {
  std::map<std::string, std::pair<Json, std::size_t>> entries;
  std::istringstream in{std::string(text)};
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "config:" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError(where, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ValidationError(where, "missing key");
    std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::size_t start_line = line_no;
    while (bracket_balance(value) > 0 && std::getline(in, raw)) {
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    Json parsed;
    try {
      parsed = Json::parse(drop_trailing_commas(value));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where, "cannot parse value of '" + key + "': " + e.what());
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (!entries.emplace(full, std::make_pair(std::move(parsed), start_line)).second)
      throw ValidationError(where, "duplicate key '" + full + "'");
  }
  return entries;
}

std::size_t as_count(const Json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ValidationError(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

double as_real(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError(key, "expected a number");
  return v.get<double>();
}

bool as_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) throw ValidationError(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ValidationError(key, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> as_strings(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ValidationError(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v) out.push_back(as_string(item, key));
  return out;
}

}  // namespace

void RunConfig::validate() const {
  distance.validate();
  metrics.validate();
  if (route.k == 0) throw ValidationError("route.k", "must be at least 1");
  if (max_in_flight == 0) throw ValidationError("llm.max_in_flight", "must be at least 1");
  std::map<std::string, int> seen;
  for (const auto& c : classes) {
    if (trim(c).empty()) throw ValidationError("classes", "empty class name");
    if (++seen[c] > 1) throw ValidationError("classes", "duplicate class '" + c + "'");
  }
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  const auto resolve = [&](const Json& v, const std::string& key) {
    const std::filesystem::path p = as_string(v, key);
    return p.is_absolute() ? p : base_dir / p;
  };

  using Setter = std::function<void(const Json&, const std::string&)>;
  const auto path_setter = [&](std::filesystem::path RunPaths::*member) -> Setter {
    return [&, member](const Json& v, const std::string& key) { cfg.paths.*member = resolve(v, key); };
  };
  const std::map<std::string, Setter, std::less<>> setters{
      {"classes", [&](const Json& v, const std::string& k) { cfg.classes = as_strings(v, k); }},
      {"seed",
       [&](const Json& v, const std::string& k) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
           throw ValidationError(k, "expected a non-negative integer");
         cfg.seed = v.get<std::uint64_t>();
       }},
      {"paths.output_dir", path_setter(&RunPaths::output_dir)},
      {"paths.trees_dir", path_setter(&RunPaths::trees_dir)},
      {"paths.refined_dir", path_setter(&RunPaths::refined_dir)},
      {"paths.explanations", path_setter(&RunPaths::explanations)},
      {"paths.embeddings", path_setter(&RunPaths::embeddings)},
      {"paths.train", path_setter(&RunPaths::train)},
      {"paths.test", path_setter(&RunPaths::test)},
      {"paths.held_out", path_setter(&RunPaths::held_out)},
      {"paths.support_pool", path_setter(&RunPaths::support_pool)},
      {"paths.ground_truth", path_setter(&RunPaths::ground_truth)},
      {"paths.transcript", path_setter(&RunPaths::transcript)},
      {"paths.in_context_example", path_setter(&RunPaths::in_context_example)},
      {"paths.clean", path_setter(&RunPaths::clean)},
      {"paths.perturbed", path_setter(&RunPaths::perturbed)},
      {"refine.t_max", [&](const Json& v, const std::string& k) { cfg.refine.t_max = as_count(v, k); }},
      {"refine.prune_count",
       [&](const Json& v, const std::string& k) { cfg.refine.prune_count = as_count(v, k); }},
      {"refine.grow_count",
       [&](const Json& v, const std::string& k) { cfg.refine.grow_count = as_count(v, k); }},
      {"refine.k_support",
       [&](const Json& v, const std::string& k) { cfg.refine.k_support = as_count(v, k); }},
      {"refine.discriminate_common",
       [&](const Json& v, const std::string& k) { cfg.refine.discriminate_common = as_bool(v, k); }},
      {"route.k", [&](const Json& v, const std::string& k) { cfg.route.k = as_count(v, k); }},
      {"distance.epsilon",
       [&](const Json& v, const std::string& k) { cfg.distance.epsilon = as_real(v, k); }},
      {"metrics.tk_lambda",
       [&](const Json& v, const std::string& k) { cfg.metrics.tk_lambda = as_real(v, k); }},
      {"baseline.enabled",
       [&](const Json& v, const std::string& k) {
         cfg.baselines.clear();
         for (const auto& name : as_strings(v, k)) {
           const auto kind = parse_baseline_kind(name);
           if (!kind) throw ValidationError(k, "unknown baseline '" + name + "'");
           cfg.baselines.push_back(*kind);
         }
       }},
      {"baseline.random_nodes",
       [&](const Json& v, const std::string& k) { cfg.random_nodes = as_count(v, k); }},
      {"llm.mode",
       [&](const Json& v, const std::string& k) {
         const auto mode = parse_llm_mode(as_string(v, k));
         if (!mode) throw ValidationError(k, "expected \"live\" or \"replay\"");
         cfg.llm_mode = *mode;
       }},
      {"llm.max_in_flight",
       [&](const Json& v, const std::string& k) { cfg.max_in_flight = as_count(v, k); }},
      {"llm.max_retries",
       [&](const Json& v, const std::string& k) { cfg.max_retries = as_count(v, k); }},
  };

  for (const auto& [key, entry] : parse_entries(text)) {
    const auto it = setters.find(key);
    const std::string where = "config:" + std::to_string(entry.second) + " " + key;
    if (it == setters.end()) throw ValidationError(where, "unknown key");
    it->second(entry.first, where);
  }

  if (cfg.paths.output_dir.empty()) cfg.paths.output_dir = base_dir / "out";
  if (cfg.paths.trees_dir.empty()) cfg.paths.trees_dir = cfg.paths.output_dir / "initial";
  if (cfg.paths.refined_dir.empty()) cfg.paths.refined_dir = cfg.paths.output_dir / "refined";
  if (cfg.paths.explanations.empty())
    cfg.paths.explanations = cfg.paths.output_dir / "explanations.jsonl";
  cfg.digest = fnv1a_hex(text);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.parent_path());
}

void apply_overrides(RunConfig& config, const ConfigOverrides& o) {
  std::string trail = config.digest;
  if (o.k) {
    config.route.k = *o.k;
    trail += "|k=" + std::to_string(*o.k);
  }
  if (o.t_max) {
    config.refine.t_max = *o.t_max;
    trail += "|t_max=" + std::to_string(*o.t_max);
  }
  if (o.epsilon) {
    config.distance.epsilon = *o.epsilon;
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", *o.epsilon);
    trail += std::string("|epsilon=") + buffer;
  }
  if (o.seed) {
    config.seed = *o.seed;
    trail += "|seed=" + std::to_string(*o.seed);
  }
  if (o.replay) {
    config.llm_mode = LlmMode::Replay;
    config.paths.transcript = *o.replay;
    trail += "|replay=" + o.replay->generic_string();
  }
  if (trail != config.digest) config.digest = fnv1a_hex(trail);
  config.validate();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

}  // namespace lvx

#include "lvx/llm.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <sstream>
#include <thread>
#include <utility>

#include <httplib.h>

#include "lvx/log.hpp"

namespace lvx {
namespace {

constexpr std::array<std::pair<PromptKind, std::string_view>, 4> kPromptKindNames{{
    {PromptKind::InitialAttributes, "InitialAttributes"},
    {PromptKind::DescriptionComposition, "DescriptionComposition"},
    {PromptKind::Grow, "Grow"},
    {PromptKind::Discriminate, "Discriminate"},
}};

const std::array<PromptTemplate, 4>& templates() {
  static const std::array<PromptTemplate, 4> all{{
      {PromptKind::InitialAttributes, "This is a {class_name} because"},
      {PromptKind::DescriptionComposition,
       "Generate sentences that describe a concept according to each attribute.\n{attributes}"},
      {PromptKind::Grow, "Add visual attributes for the {node_name} of a {class_name}, to the json"},
      {PromptKind::Discriminate,
       "The {node_name} of {class_name} is different from {other_class_name} because"},
  }};
  return all;
}

constexpr std::string_view kInContextExample =
    R"(Describe the visual attributes of a category as a json tree with the four
primary nodes Concepts, Substances, Attributes and Environments.

This is a cat because
{"name": "cat", "children": [
  {"name": "Concepts", "kind": "Concepts", "children": [{"name": "mammal"}, {"name": "pet"}]},
  {"name": "Substances", "kind": "Substances", "children": [{"name": "fur"}]},
  {"name": "Attributes", "kind": "Attributes", "children": [
    {"name": "pointed ears"}, {"name": "whiskers"}, {"name": "slit pupils"}]},
  {"name": "Environments", "kind": "Environments", "children": [{"name": "indoors"}, {"name": "sofa"}]}
]})";

Json key_to_json(const RequestKey& key) {
  Json out = Json::object();
  out["kind"] = std::string(to_string(key.kind));
  out["category"] = key.category;
  out["node"] = key.node;
  out["iteration"] = key.iteration;
  return out;
}

RequestKey key_from_json(const Json& value, const std::string& where) {
  if (!value.is_object()) throw ValidationError(where + ".key", "expected an object");
  RequestKey key;
  const auto kind = parse_prompt_kind(value.value("kind", ""));
  if (!kind) throw ValidationError(where + ".key.kind", "unknown prompt kind");
  key.kind = *kind;
  key.category = value.value("category", "");
  key.node = value.value("node", "");
  key.iteration = value.value("iteration", std::size_t{0});
  return key;
}

// Splits "scheme://host[:port]/prefix" into the client origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  const auto path_start =
      base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : std::move(fallback);
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  for (const auto& [k, name] : kPromptKindNames)
    if (k == kind) return name;
  return "InitialAttributes";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view text) {
  for (const auto& [kind, name] : kPromptKindNames)
    if (name == text) return kind;
  return std::nullopt;
}

const PromptTemplate& default_template(PromptKind kind) {
  for (const auto& t : templates())
    if (t.kind == kind) return t;
  return templates().front();
}

std::string_view default_in_context_example() { return kInContextExample; }

std::string render_template(std::string_view text, const PromptBindings& bindings) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const auto close = text.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    const std::string_view name = text.substr(open + 1, close - open - 1);
    const auto it = bindings.find(name);
    if (it == bindings.end())
      throw ValidationError("prompt", "unbound placeholder {" + std::string(name) + "}");
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

std::string render_prompt(PromptKind kind, const PromptBindings& bindings,
                          std::string_view in_context_example) {
  std::string body = render_template(default_template(kind).text, bindings);
  if (in_context_example.empty()) return body;
  return std::string(in_context_example) + "\n\n" + body;
}

std::string RequestKey::describe() const {
  std::ostringstream out;
  out << to_string(kind) << "(category='" << category << "', node='" << node
      << "', iteration=" << iteration << ")";
  return out.str();
}

Transcript Transcript::parse(std::istream& in, const std::string& source) {
  Transcript transcript;
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    Json record;
    try {
      record = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": malformed transcript record: " + e.what(), line_start + e.byte);
    }
    if (!record.is_object() || !record.contains("key"))
      throw ValidationError(where, "transcript record needs 'key', 'prompt' and 'response'");
    transcript.append(TranscriptRecord{key_from_json(record["key"], where),
                                       record.value("prompt", ""),
                                       record.value("response", "")});
  }
  return transcript;
}

Transcript Transcript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open transcript " + path.string());
  return parse(in, path.string());
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    Json record = Json::object();
    record["key"] = key_to_json(r.key);
    record["prompt"] = r.prompt;
    record["response"] = r.response;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void Transcript::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write transcript " + path.string());
  out << to_jsonl();
}

const TranscriptRecord* Transcript::find(const RequestKey& key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &records_[it->second];
}

void Transcript::append(TranscriptRecord record) {
  if (index_.count(record.key))
    throw ValidationError("transcript", "duplicate key " + record.key.describe());
  index_.emplace(record.key, records_.size());
  records_.push_back(std::move(record));
}

std::string_view to_string(LlmMode mode) { return mode == LlmMode::Live ? "live" : "replay"; }

std::optional<LlmMode> parse_llm_mode(std::string_view text) {
  if (text == "live") return LlmMode::Live;
  if (text == "replay") return LlmMode::Replay;
  return std::nullopt;
}

LiveOptions LiveOptions::from_env() {
  LiveOptions options;
  options.base_url = env_or("LVX_LLM_BASE_URL", "https://api.openai.com/v1");
  options.model = env_or("LVX_LLM_MODEL", "gpt-3.5-turbo");
  options.api_key = env_or("LVX_LLM_API_KEY", "");
  return options;
}

struct LlmClient::Impl {
  LlmMode mode;
  LiveOptions options;
  mutable std::mutex transcript_mutex;
  Transcript transcript;
  std::counting_semaphore<1024> in_flight;

  Impl(LlmMode m, LiveOptions o, Transcript t)
      : mode(m),
        options(std::move(o)),
        transcript(std::move(t)),
        in_flight(std::clamp(options.max_in_flight, 1, 1024)) {}

  std::string post_once(const std::string& prompt) {
    const auto [origin, prefix] = split_base_url(options.base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    client.set_write_timeout(options.timeout);

    httplib::Headers headers;
    if (!options.api_key.empty())
      headers.emplace("Authorization", "Bearer " + options.api_key);

    Json body = Json::object();
    body["model"] = options.model;
    body["temperature"] = options.temperature;
    body["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});

    const auto result =
        client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!result)
      throw LlmError("LLM transport failure: " + httplib::to_string(result.error()), true);
    const int status = result->status;
    if (status == 429 || status >= 500)
      throw LlmError("LLM endpoint returned HTTP " + std::to_string(status), true);
    if (status != 200)
      throw LlmError("LLM endpoint returned HTTP " + std::to_string(status) + ": " + result->body);

    try {
      const Json reply = Json::parse(result->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw LlmError(std::string("malformed chat-completion reply: ") + e.what());
    }
  }

  std::string post_with_retries(const std::string& prompt) {
    in_flight.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{in_flight};

    for (int attempt = 0;; ++attempt) {
      try {
        return post_once(prompt);
      } catch (const LlmError& e) {
        if (!e.retryable() || attempt >= options.max_retries) throw;
        log_warning(std::string(e.what()) + "; retrying");
        std::this_thread::sleep_for(options.retry_backoff * (1 << attempt));
      }
    }
  }
};

LlmClient::LlmClient(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
LlmClient::LlmClient(LlmClient&&) noexcept = default;
LlmClient& LlmClient::operator=(LlmClient&&) noexcept = default;
LlmClient::~LlmClient() = default;

LlmClient LlmClient::replay(Transcript transcript) {
  return LlmClient(std::make_unique<Impl>(LlmMode::Replay, LiveOptions{}, std::move(transcript)));
}

LlmClient LlmClient::live(LiveOptions options, Transcript recorded) {
  return LlmClient(std::make_unique<Impl>(LlmMode::Live, std::move(options), std::move(recorded)));
}

LlmMode LlmClient::mode() const { return impl_->mode; }

Transcript LlmClient::transcript() const {
  std::lock_guard lock(impl_->transcript_mutex);
  return impl_->transcript;
}

std::string LlmClient::complete(const RequestKey& key, const std::string& prompt) {
  {
    std::lock_guard lock(impl_->transcript_mutex);
    if (const auto* hit = impl_->transcript.find(key)) return hit->response;
  }
  if (impl_->mode == LlmMode::Replay)
    throw LlmError("replay transcript has no record for " + key.describe());

  std::string response = impl_->post_with_retries(prompt);
  std::lock_guard lock(impl_->transcript_mutex);
  // A concurrent caller may have recorded the same key first.
  if (const auto* hit = impl_->transcript.find(key)) return hit->response;
  impl_->transcript.append(TranscriptRecord{key, prompt, response});
  return response;
}

std::optional<std::string> extract_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        std::string candidate(text.substr(start, i - start + 1));
        if (Json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  return std::nullopt;
}

AttributeTree parse_attribute_response(std::string_view text) {
  const auto object = extract_json_object(text);
  if (!object) throw UnparsableResponse("LLM response contains no JSON object");
  // A fragment's top node often carries the kind of the node it extends.
  Json value = Json::parse(*object);
  value.erase("kind");
  return tree_from_json(value);
}

}  // namespace lvx

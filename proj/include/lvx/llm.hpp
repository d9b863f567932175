#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lvx/errors.hpp"
#include "lvx/tree.hpp"

namespace lvx {

enum class PromptKind { InitialAttributes, DescriptionComposition, Grow, Discriminate };

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> parse_prompt_kind(std::string_view text);

/// Template text uses `{placeholder}` markers.
struct PromptTemplate {
  PromptKind kind;
  std::string text;
};

const PromptTemplate& default_template(PromptKind kind);
std::string_view default_in_context_example();

using PromptBindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every `{name}` in `text`. Throws ValidationError naming the
/// first placeholder without a binding. Unused bindings are ignored.
std::string render_template(std::string_view text, const PromptBindings& bindings);

/// In-context example (when non-empty), a blank line, then the instantiated template.
std::string render_prompt(PromptKind kind, const PromptBindings& bindings,
                          std::string_view in_context_example = {});

/// Identity of one LLM request inside a run. `node` is empty for whole-class requests.
struct RequestKey {
  PromptKind kind = PromptKind::InitialAttributes;
  std::string category;
  std::string node;
  std::size_t iteration = 0;

  auto operator<=>(const RequestKey&) const = default;
  std::string describe() const;
};

struct TranscriptRecord {
  RequestKey key;
  std::string prompt;
  std::string response;
};

/// Ordered log of prompts and responses, stored as JSONL.
class Transcript {
 public:
  static Transcript parse(std::istream& in, const std::string& source = "<stream>");
  static Transcript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_jsonl() const;

  const TranscriptRecord* find(const RequestKey& key) const;
  /// Throws ValidationError when the key is already present.
  void append(TranscriptRecord record);

  std::size_t size() const { return records_.size(); }
  const std::vector<TranscriptRecord>& records() const { return records_; }

 private:
  std::vector<TranscriptRecord> records_;
  std::map<RequestKey, std::size_t> index_;
};

enum class LlmMode { Live, Replay };

std::string_view to_string(LlmMode mode);
std::optional<LlmMode> parse_llm_mode(std::string_view text);

struct LiveOptions {
  /// e.g. `https://api.example.com/v1`; requests go to `<base_url>/chat/completions`.
  std::string base_url;
  std::string model;
  std::string api_key;
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{250};
  int max_in_flight = 4;
  std::chrono::seconds timeout{120};

  /// Reads LVX_LLM_BASE_URL, LVX_LLM_MODEL and LVX_LLM_API_KEY.
  static LiveOptions from_env();
};

/// Sends prompts to a chat-completion endpoint (live) or answers them from a
/// recorded transcript (replay). Thread-safe.
class LlmClient {
 public:
  static LlmClient replay(Transcript transcript);
  /// Requests whose key is already in `recorded` are answered from it.
  static LlmClient live(LiveOptions options, Transcript recorded = {});

  LlmClient(LlmClient&&) noexcept;
  LlmClient& operator=(LlmClient&&) noexcept;
  ~LlmClient();

  /// Replay misses throw LlmError naming the key. Live transport failures are
  /// retried `max_retries` times before an LlmError with `retryable()` escapes.
  std::string complete(const RequestKey& key, const std::string& prompt);

  LlmMode mode() const;
  /// Snapshot of everything recorded or replayed so far.
  Transcript transcript() const;

 private:
  struct Impl;
  explicit LlmClient(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

class UnparsableResponse : public LlmError {
 public:
  explicit UnparsableResponse(const std::string& what) : LlmError(what) {}
};

/// Text of the first balanced `{...}` span in `text` that parses as a JSON
/// object. Braces inside surrounding prose that do not parse are skipped.
std::optional<std::string> extract_json_object(std::string_view text);

/// Parses the first JSON object in an LLM reply as a tree. Throws
/// UnparsableResponse when no object is present and ValidationError when the
/// object does not match the tree schema.
AttributeTree parse_attribute_response(std::string_view text);

}  // namespace lvx

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lvx {

/// Base of every error the engine raises. `exit_code()` is the CLI status
/// the harness reports when the error escapes a command.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Malformed input text (JSON, JSONL, config). Carries the byte offset when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")", 2),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Well-formed input that violates a schema or invariant. `path` locates the
/// offending element, e.g. `$.children[1].name`.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what, 2), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Inputs that are individually valid but do not line up (unknown ids,
/// unmatched samples, dimension mismatches across files).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, 3) {}
};

/// Failures talking to the language model, including replay misses.
class LlmError : public Error {
 public:
  explicit LlmError(const std::string& what, bool retryable = false)
      : Error(what, 4), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace lvx

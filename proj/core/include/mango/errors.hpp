#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mango {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input that cannot be turned into a record. `line` is 1-based, 0 if not applicable.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0, std::string raw = {})
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line), raw_(std::move(raw)) {}

  std::size_t line() const noexcept { return line_; }
  // The unparsed payload, kept for audit.
  const std::string& raw() const noexcept { return raw_; }

private:
  std::size_t line_;
  std::string raw_;
};

// A well-formed record that violates a domain invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Provider call failed after all retry attempts, or failed permanently.
class TransportError : public Error {
public:
  using Error::Error;
};

// Thrown by backends for failures that are worth retrying (timeouts, 429, 5xx).
class TransientError : public Error {
public:
  using Error::Error;
};

// Replay mode was asked for a response that was never recorded.
class CacheMissError : public Error {
public:
  explicit CacheMissError(std::string key)
      : Error("replay cache miss for key " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

// Configuration problems; `key_path` is e.g. "generation.temperature".
class ConfigError : public Error {
public:
  ConfigError(std::string key_path, const std::string& what)
      : Error(key_path.empty() ? what : key_path + ": " + what), key_path_(std::move(key_path)) {}
  const std::string& key_path() const noexcept { return key_path_; }

private:
  std::string key_path_;
};

// Embedding provider failed for a subset of a batch.
class EmbeddingError : public Error {
public:
  EmbeddingError(const std::string& what, std::vector<std::size_t> failed)
      : Error(what), failed_(std::move(failed)) {}
  const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }

private:
  std::vector<std::size_t> failed_;
};

}  // namespace mango

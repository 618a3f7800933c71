#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mango::embedding {

struct EmbeddingVector {
  std::vector<double> values;
  std::string source_text_key;  // canonical form of the embedded text
};

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);

// v / ||v||. Throws std::domain_error for a zero (or non-finite) vector.
std::vector<double> normalize(std::span<const double> v);
EmbeddingVector normalize(const EmbeddingVector& v);

// Both throw std::invalid_argument on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);
double euclidean(std::span<const double> u, std::span<const double> v);

// A sentence encoder. Same text must give the same vector for a fixed identity.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Model/version tag stored alongside caches and indexes.
  virtual std::string identity() const = 0;
  virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
};

// Offline provider: lowercase word tokens feature-hashed into `dimension` signed buckets.
class HashingProvider final : public EmbeddingProvider {
public:
  explicit HashingProvider(std::size_t dimension = 64);
  std::size_t dimension() const override { return dimension_; }
  std::string identity() const override;
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

  std::vector<float> embed_one(std::string_view text) const;

private:
  std::size_t dimension_;
};

// OpenAI-compatible /embeddings endpoint.
struct HttpEmbeddingConfig {
  std::string endpoint;
  std::string model;
  std::string api_key;
  std::size_t dimension = 384;
  std::chrono::seconds timeout{120};
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
  std::size_t dimension() const override { return config_.dimension; }
  std::string identity() const override { return "remote:" + config_.model; }
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
  HttpEmbeddingConfig config_;
};

// Persistent (identity, text key) -> float32 vector store. The file holds an identity header
// followed by appended records; opening a file written by another identity is an error.
// An empty path keeps the cache in memory only.
class EmbeddingCache {
public:
  EmbeddingCache(std::filesystem::path path, std::string identity, std::size_t dimension);

  std::optional<std::vector<float>> lookup(const std::string& key) const;
  void insert(const std::string& key, std::span<const float> values);
  std::size_t size() const;

  const std::string& identity() const noexcept { return identity_; }
  std::size_t dimension() const noexcept { return dimension_; }

private:
  void load();
  void write_header();

  std::filesystem::path path_;
  std::string identity_;
  std::size_t dimension_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::vector<float>> entries_;
};

// Provider + cache front end. Safe for concurrent callers.
class Embedder {
public:
  Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache = nullptr,
           std::size_t batch_size = 64, int max_attempts = 3);

  // One unit vector per text, order preserved. Texts are keyed by canonical form; the provider
  // sees each distinct key at most once and only on a cache miss. Throws EmbeddingError listing
  // the input indices that could not be embedded.
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);
  EmbeddingVector embed_one(const std::string& text);

  std::size_t dimension() const { return provider_->dimension(); }
  std::string identity() const { return provider_->identity(); }
  // Texts sent to the provider so far.
  std::uint64_t provider_texts() const noexcept { return provider_texts_.load(); }

private:
  std::shared_ptr<EmbeddingProvider> provider_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::size_t batch_size_;
  int max_attempts_;
  std::atomic<std::uint64_t> provider_texts_{0};
};

}  // namespace mango::embedding

#include "mango/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mango/errors.hpp"
#include "mango/text.hpp"

namespace mango::embedding {

namespace fs = std::filesystem;

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (auto& x : out) x /= n;
  return out;
}

EmbeddingVector normalize(const EmbeddingVector& v) {
  return {normalize(std::span<const double>(v.values)), v.source_text_key};
}

double cosine(std::span<const double> u, std::span<const double> v) {
  const double d = dot(u, v);
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw std::domain_error("cosine of a zero vector");
  return std::clamp(d / (nu * nv), -1.0, 1.0);
}

double euclidean(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

HashingProvider::HashingProvider(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::string HashingProvider::identity() const {
  return "stub:hashing-bow-v1:d" + std::to_string(dimension_);
}

std::vector<float> HashingProvider::embed_one(std::string_view raw) const {
  const std::string lowered = text::ascii_lower(raw);
  std::vector<double> acc(dimension_, 0.0);
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && !text::is_word_byte(static_cast<unsigned char>(lowered[i]))) ++i;
    const std::size_t b = i;
    while (i < lowered.size() && text::is_word_byte(static_cast<unsigned char>(lowered[i]))) ++i;
    if (i == b) continue;
    const std::uint64_t h = fnv1a(std::string_view(lowered).substr(b, i - b));
    acc[h % dimension_] += ((h >> 32) & 1U) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : acc) norm += x * x;
  if (norm == 0.0) {
    // No tokens, or all contributions cancelled: fall back to one bucket of the whole text.
    acc[fnv1a(lowered) % dimension_] = 1.0;
    norm = 1.0;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dimension_);
  for (std::size_t k = 0; k < dimension_; ++k) out[k] = static_cast<float>(acc[k] / norm);
  return out;
}

std::vector<std::vector<float>> HashingProvider::embed(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'N', 'G', 'E', 'M', 'B', '0', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

EmbeddingCache::EmbeddingCache(fs::path path, std::string identity, std::size_t dimension)
    : path_(std::move(path)), identity_(std::move(identity)), dimension_(dimension) {
  if (path_.empty()) return;
  if (fs::exists(path_) && fs::file_size(path_) > 0) {
    load();
  } else {
    write_header();
  }
}

void EmbeddingCache::write_header() {
  std::string buf(kMagic, sizeof(kMagic));
  put_u32(buf, static_cast<std::uint32_t>(identity_.size()));
  buf += identity_;
  put_u32(buf, static_cast<std::uint32_t>(dimension_));
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create embedding cache " + path_.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void EmbeddingCache::load() {
  std::ifstream in(path_, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  const std::size_t n = data.size();
  if (n < sizeof(kMagic) + 4 || data.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not an embedding cache file: " + path_.string());
  }
  std::size_t pos = sizeof(kMagic);
  const std::uint32_t id_len = get_u32(p + pos);
  pos += 4;
  if (pos + id_len + 4 > n) throw ParseError("truncated embedding cache header: " + path_.string());
  const std::string stored_identity = data.substr(pos, id_len);
  pos += id_len;
  const std::uint32_t dim = get_u32(p + pos);
  pos += 4;
  if (stored_identity != identity_) {
    throw Error("embedding cache " + path_.string() + " belongs to provider \"" + stored_identity +
                "\", not \"" + identity_ + "\"");
  }
  if (dim != dimension_) throw Error("embedding cache dimension mismatch: " + path_.string());

  const std::size_t vec_bytes = 4 * dimension_;
  while (pos + 4 <= n) {
    const std::uint32_t key_len = get_u32(p + pos);
    if (pos + 4 + key_len + vec_bytes > n) break;  // torn tail from an interrupted append
    std::string key = data.substr(pos + 4, key_len);
    pos += 4 + key_len;
    std::vector<float> v(dimension_);
    for (std::size_t k = 0; k < dimension_; ++k) v[k] = std::bit_cast<float>(get_u32(p + pos + 4 * k));
    pos += vec_bytes;
    entries_.insert_or_assign(std::move(key), std::move(v));
  }
}

std::optional<std::vector<float>> EmbeddingCache::lookup(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const std::string& key, std::span<const float> values) {
  if (values.size() != dimension_) throw std::invalid_argument("embedding dimension mismatch");
  std::unique_lock lock(mu_);
  if (entries_.contains(key)) return;
  entries_.emplace(key, std::vector<float>(values.begin(), values.end()));
  if (path_.empty()) return;
  std::string buf;
  put_u32(buf, static_cast<std::uint32_t>(key.size()));
  buf += key;
  for (float f : values) put_u32(buf, std::bit_cast<std::uint32_t>(f));
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("cannot append to embedding cache " + path_.string());
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------------------------

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache,
                   std::size_t batch_size, int max_attempts)
    : provider_(std::move(provider)),
      cache_(std::move(cache)),
      batch_size_(batch_size == 0 ? 1 : batch_size),
      max_attempts_(std::max(1, max_attempts)) {
  if (!provider_) throw std::invalid_argument("embedder needs a provider");
  if (!cache_) {
    cache_ = std::make_shared<EmbeddingCache>(fs::path{}, provider_->identity(), provider_->dimension());
  } else if (cache_->identity() != provider_->identity() ||
             cache_->dimension() != provider_->dimension()) {
    throw Error("embedding cache identity \"" + cache_->identity() +
                "\" does not match provider \"" + provider_->identity() + "\"");
  }
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(text::canonical_text(t));

  // Distinct keys missing from the cache, with the input positions that need them.
  std::vector<std::string> missing;
  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto [it, inserted] = positions.try_emplace(keys[i]);
    it->second.push_back(i);
    if (inserted && !cache_->lookup(keys[i])) missing.push_back(keys[i]);
  }

  std::vector<std::size_t> failed;
  for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
    const std::size_t stop = std::min(missing.size(), start + batch_size_);
    std::span<const std::string> chunk(missing.data() + start, stop - start);
    std::vector<std::vector<float>> vectors;
    bool ok = false;
    for (int attempt = 0; attempt < max_attempts_ && !ok; ++attempt) {
      try {
        vectors = provider_->embed(chunk);
        ok = vectors.size() == chunk.size();
        for (const auto& v : vectors) ok = ok && v.size() == provider_->dimension();
      } catch (const std::exception&) {
        ok = false;
      }
    }
    provider_texts_ += chunk.size();
    if (!ok) {
      for (const auto& k : chunk) {
        for (std::size_t pos : positions[k]) failed.push_back(pos);
      }
      continue;
    }
    for (std::size_t j = 0; j < chunk.size(); ++j) cache_->insert(chunk[j], vectors[j]);
  }
  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    throw EmbeddingError("embedding provider failed for " + std::to_string(failed.size()) + " texts",
                         std::move(failed));
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& key : keys) {
    auto stored = cache_->lookup(key);
    std::vector<double> values(stored->begin(), stored->end());
    out.push_back({normalize(std::span<const double>(values)), key});
  }
  return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) {
  return std::move(embed_batch(std::span<const std::string>(&text, 1)).front());
}

}  // namespace mango::embedding

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mango/embedding.hpp"
#include "mango/kb.hpp"
#include "mango/narrative.hpp"

namespace mango::retrieval {

struct RetrievalParams {
  std::size_t k = 2;
  double min_similarity = 0.5;  // strict floor
};

// Throws std::invalid_argument unless k > 0 and min_similarity is finite.
void validate(const RetrievalParams& params);

struct IndexEntry {
  std::string cluster_id;
  std::string statement;
  std::vector<double> vector;  // unit norm
};

// Exact-search index over representative statements.
class RetrievalIndex {
public:
  RetrievalIndex(std::string identity, std::size_t dimension, std::vector<IndexEntry> entries);

  const std::string& identity() const noexcept { return identity_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  // Binary file: magic, identity, dimension, count, then (id, statement) strings and
  // count * dimension little-endian float64 values.
  void save(const std::filesystem::path& path) const;
  static RetrievalIndex load(const std::filesystem::path& path);

private:
  std::string identity_;
  std::size_t dimension_;
  std::vector<IndexEntry> entries_;
};

// Throws std::invalid_argument for an empty knowledge base.
RetrievalIndex build_index(std::span<const kb::AssertionCluster> clusters, embedding::Embedder& embedder);

struct AnonymizedText {
  std::string text;
  std::vector<std::string> warnings;
};

// Whole-word replacement of participant 0 by "X" and participant 1 by "Y". Possessives follow
// from the word-boundary rule ("Kenji's" -> "Y's").
AnonymizedText anonymize_narrative(const dialogue::Narrative& narrative);

struct RetrievalHit {
  std::string cluster_id;
  std::string statement;
  double similarity = 0.0;
};

// Exact scan: at most k entries with similarity > min_similarity, ordered by (-similarity, id).
std::vector<RetrievalHit> search(const RetrievalIndex& index, std::span<const double> query,
                                 const RetrievalParams& params);

struct RetrievalResult {
  std::string query_text;  // anonymized narrative
  std::vector<RetrievalHit> hits;
  std::vector<std::string> warnings;
};

// Throws ValidationError when the embedder's identity differs from the index's.
RetrievalResult retrieve(const dialogue::Narrative& narrative, const RetrievalIndex& index,
                         embedding::Embedder& embedder, const RetrievalParams& params);
RetrievalResult retrieve_text(const std::string& text, const RetrievalIndex& index,
                              embedding::Embedder& embedder, const RetrievalParams& params);

}  // namespace mango::retrieval

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mango/embedding.hpp"
#include "mango/gateway.hpp"
#include "mango/hac.hpp"
#include "mango/kb.hpp"

namespace mango::consolidate {

struct Bucket {
  std::string concept_cluster_id;
  std::string culture_cluster_id;
  std::vector<kb::Assertion> assertions;
};

inline constexpr std::string_view kDefaultRenderTemplate = "{concept}: {statement}";

// Throws std::invalid_argument for a template with an unknown or unterminated placeholder.
// Known placeholders: {concept}, {culture}, {statement}.
void validate_render_template(std::string_view tmpl);

// Fields are trimmed before substitution.
std::string render_for_embedding(const kb::Assertion& assertion,
                                 std::string_view tmpl = kDefaultRenderTemplate);

// Summed assertion frequency per canonical concept (or culture) key.
std::unordered_map<std::string, std::uint64_t> entity_frequencies(std::span<const kb::Assertion> assertions,
                                                                  kb::EntityKind kind);

// Clusters entity strings; ids are "<kind>-NNNN" in first-appearance order. The representative
// is the member with the highest frequency in `frequencies` (looked up by canonical key), then
// the shortest, then the lexicographically smallest.
std::vector<kb::EntityCluster> cluster_entities(
    std::span<const std::string> entities, kb::EntityKind kind, embedding::Embedder& embedder,
    const HacParams& params, const std::unordered_map<std::string, std::uint64_t>& frequencies = {});

// Groups assertions by (concept cluster, culture cluster). Buckets are ordered by that id pair.
// Throws ValidationError naming any concept or culture missing from the clusters.
std::vector<Bucket> partition_assertions(std::span<const kb::Assertion> assertions,
                                         std::span<const kb::EntityCluster> concept_clusters,
                                         std::span<const kb::EntityCluster> culture_clusters);

// Clusters without representatives: statement fields are empty, members are ordered by
// descending frequency, ids are "<concept id>/<culture id>/NNN".
std::vector<kb::AssertionCluster> cluster_bucket(const Bucket& bucket, embedding::Embedder& embedder,
                                                 const HacParams& params,
                                                 std::string_view render_template = kDefaultRenderTemplate);

std::string format_member_line(const kb::Assertion& member);
llm::CompletionRequest build_representative_prompt(const kb::AssertionCluster& cluster);

// Reads a (concept, culture, statement) triple from a JSON object or from a
// "Concept: X. Culture: Y. Statement: Z." line. Returns false when neither is present.
bool parse_representative(std::string_view raw, kb::Assertion& out);

struct RepresentativeResult {
  kb::AssertionCluster cluster;
  std::size_t gateway_calls = 0;
  bool fallback = false;  // representative copied from the top member
  std::string warning;
};

// Singletons copy their member and make no call. Otherwise the model is asked once, retried
// once with a new sample index, then the highest-frequency member is used.
RepresentativeResult generate_representative(const kb::AssertionCluster& cluster, llm::Gateway& gateway);

struct ConsolidateOptions {
  HacParams params;
  std::string render_template = std::string(kDefaultRenderTemplate);
  std::size_t concurrency = 1;
};

struct BucketFailure {
  std::string bucket;
  std::string message;
};

struct ConsolidateOutput {
  std::vector<kb::AssertionCluster> clusters;  // descending frequency, ties by id
  std::vector<kb::EntityCluster> concept_clusters;
  std::vector<kb::EntityCluster> culture_clusters;
  std::size_t bucket_count = 0;
  std::size_t representative_calls = 0;
  std::size_t fallbacks = 0;
  // Buckets whose clustering failed; their assertions become singleton clusters.
  std::vector<BucketFailure> failures;
  std::vector<std::string> warnings;
};

ConsolidateOutput consolidate_all(std::span<const kb::Assertion> assertions, embedding::Embedder& embedder,
                                  llm::Gateway& gateway, const ConsolidateOptions& options = {});

void sort_by_frequency(std::vector<kb::AssertionCluster>& clusters);

// The n most frequent clusters (all of them if n exceeds the count).
std::vector<kb::AssertionCluster> select_top(std::span<const kb::AssertionCluster> clusters, std::size_t n);

}  // namespace mango::consolidate

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mango/embedding.hpp"

namespace mango::consolidate {

enum class Linkage { kWard };
enum class Metric { kEuclideanOnNormalized };

struct HacParams {
  Linkage linkage = Linkage::kWard;
  Metric metric = Metric::kEuclideanOnNormalized;
  double distance_threshold = 1.5;
};

// Throws std::invalid_argument unless distance_threshold > 0.
void validate(const HacParams& params);

// One agglomeration step. Leaves are 0..n-1; merge number k creates cluster n+k.
// cluster_a is the operand holding the smaller leaf index.
struct Merge {
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<Merge> merges;  // greedy order; n-1 entries for a complete run
  std::size_t leaf_count = 0;
};

// Complete Ward agglomeration. Pairwise Euclidean distances seed a condensed matrix that is
// updated with the Lance-Williams recurrence
//   d(i+j, k)^2 = ((n_i+n_k) d(i,k)^2 + (n_j+n_k) d(j,k)^2 - n_k d(i,j)^2) / (n_i+n_j+n_k).
// Every step merges the globally closest pair; ties go to the lowest (a, b), where a cluster is
// identified by its smallest leaf index. Memory is O(n^2).
Dendrogram ward_dendrogram(std::span<const std::vector<double>> points);

// Applies merges in greedy order and stops at the first one whose distance exceeds
// `threshold`. Labels are numbered by first appearance over leaf order.
std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendrogram, double threshold);

// Flat Ward clustering of (normalized) embedding vectors. Throws std::invalid_argument on empty
// input or mismatched dimensions.
std::vector<std::size_t> hac_ward(std::span<const embedding::EmbeddingVector> vectors,
                                  const HacParams& params);
std::vector<std::size_t> hac_ward(std::span<const std::vector<double>> points,
                                  const HacParams& params);

std::size_t cluster_count(std::span<const std::size_t> labels);

}  // namespace mango::consolidate

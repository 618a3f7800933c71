#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mango/consolidate.hpp"
#include "mango/embedding.hpp"
#include "mango/gateway.hpp"
#include "mango/kb.hpp"

namespace mango::testing {

std::filesystem::path fixtures_dir();
std::filesystem::path golden_dir();

class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// Rule-based chat backend that answers every prompt the pipeline sends with canned, deterministic
// text. Used to record the replay fixtures and to drive tests that need a live backend.
class FixtureBackend final : public llm::ChatBackend {
public:
  llm::CompletionResult complete(const llm::CompletionRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

private:
  std::atomic<std::size_t> calls_{0};
};

// The four Step 2a member assertions of the tipping example, frequencies 5, 2, 1, 1.
std::vector<kb::Assertion> tipping_assertions();
inline constexpr const char* kTippingRepresentative =
    "Tipping is not a common practice in Japan and can be considered rude or impolite.";

// The tipping members as one (concept cluster, culture cluster) bucket, the grouping a sentence
// encoder gives: statement-level clustering with `embedder`, then a representative per cluster.
std::vector<consolidate::RepresentativeResult> consolidate_tipping_bucket(embedding::Embedder& embedder,
                                                                         llm::Gateway& gateway);

// --- brute-force Ward -------------------------------------------------------------------------

struct OracleMerge {
  std::size_t min_leaf_a;
  std::size_t min_leaf_b;
  double distance;
};

// O(n^3) greedy agglomeration that recomputes the centroid form of the Ward distance,
// sqrt(2 na nb / (na + nb)) * |ca - cb|, for every pair at every step. Ties go to the lowest
// (smallest-leaf) pair.
std::vector<OracleMerge> oracle_ward_merges(const std::vector<std::vector<double>>& points);
// Flat labels after applying merges in order until one exceeds the threshold; labels numbered
// by first appearance.
std::vector<std::size_t> oracle_ward_labels(const std::vector<std::vector<double>>& points, double threshold);

std::vector<double> random_unit_vector(std::size_t d, std::mt19937_64& rng);

// Same partition up to label renaming.
bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

// The Step 1a (chopsticks), Step 1b (Japan) and Step 2b (tipping cluster) prompts, keyed by
// golden file name, and their plain-text rendering.
std::vector<std::pair<std::string, llm::CompletionRequest>> golden_requests();
std::string render_request(const llm::CompletionRequest& request);

// A gateway over FixtureBackend in live mode with a simulated clock.
std::shared_ptr<llm::Gateway> fixture_gateway(std::shared_ptr<FixtureBackend> backend = nullptr);

// Gateway replaying the committed fixture store; a miss throws CacheMissError.
std::shared_ptr<llm::Gateway> replay_gateway();

}  // namespace mango::testing

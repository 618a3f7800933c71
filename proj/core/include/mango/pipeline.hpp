#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "mango/config.hpp"
#include "mango/embedding.hpp"
#include "mango/gateway.hpp"

namespace mango::pipeline {

enum class Stage { kGenerate, kFilter, kConsolidate, kIndex, kRetrieve, kDialogue, kStats };

std::string_view to_string(Stage stage);
// Throws std::invalid_argument for an unknown name.
Stage stage_from_string(std::string_view name);

// Stage files, relative to the work directory.
namespace files {
inline constexpr std::string_view kRawAssertions = "assertions.raw.jsonl";
inline constexpr std::string_view kGenerationLog = "generation_log.jsonl";
inline constexpr std::string_view kFiltered = "assertions.filtered.jsonl";
inline constexpr std::string_view kRejected = "assertions.rejected.jsonl";
inline constexpr std::string_view kKnowledgeBase = "kb.jsonl";
inline constexpr std::string_view kKnowledgeBaseTop = "kb.top.jsonl";
inline constexpr std::string_view kConceptClusters = "concept_clusters.jsonl";
inline constexpr std::string_view kCultureClusters = "culture_clusters.jsonl";
inline constexpr std::string_view kIndex = "index.bin";
inline constexpr std::string_view kNarratives = "narratives.jsonl";
inline constexpr std::string_view kRetrievals = "retrievals.jsonl";
}  // namespace files

// "<stage>.stats.json"
std::string stats_file(Stage stage);

enum ExitCode : int { kOk = 0, kStageError = 1, kConfigError = 2 };

struct RunContext {
  config::PipelineConfig config;
  // Test hooks; when null the backend and provider are built from the config.
  std::shared_ptr<llm::ChatBackend> chat_backend;
  std::shared_ptr<embedding::EmbeddingProvider> embedding_provider;
  std::shared_ptr<llm::Clock> clock;
  std::ostream* out = nullptr;  // defaults to std::cout
  std::ostream* err = nullptr;  // defaults to std::cerr
};

struct StageOptions {
  // retrieve: narratives JSONL (or plain text) to query with.
  // dialogue: narratives JSONL to use instead of generating new ones.
  std::filesystem::path narrative_file;
};

// Per-stage seed derived from the run seed, so stages run in separate processes stay
// reproducible.
std::uint64_t stage_seed(std::uint64_t run_seed, Stage stage);

std::shared_ptr<llm::Gateway> make_gateway(const RunContext& context);
std::shared_ptr<embedding::Embedder> make_embedder(const RunContext& context);

// Runs one stage. Errors are reported on `err`; the return value is an ExitCode.
int run_stage(Stage stage, const RunContext& context, const StageOptions& options = {});

}  // namespace mango::pipeline

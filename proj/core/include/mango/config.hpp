#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mango/consolidate.hpp"
#include "mango/gateway.hpp"
#include "mango/retrieval.hpp"

namespace mango::config {

enum class EmbedderKind { kStub, kRemote };

struct LlmSection {
  llm::GatewayMode mode = llm::GatewayMode::kReplay;
  std::string model = "gpt-3.5-turbo-1106";
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::filesystem::path replay_dir = "replay";
  std::uint64_t tokens_per_minute = 1'000'000;
  std::uint64_t requests_per_minute = 10'000;
  double price_input_per_million = 1.0;
  double price_output_per_million = 2.0;
  int max_attempts = 6;
  int timeout_seconds = 120;
};

struct EmbeddingSection {
  EmbedderKind provider = EmbedderKind::kStub;
  std::size_t dimension = 64;
  std::string endpoint = "https://api.openai.com/v1/embeddings";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::filesystem::path cache;  // empty: in-memory only
};

struct GenerationSection {
  std::uint32_t samples_per_prompt = 5;
  double temperature = 1.0;
  std::uint32_t examples_per_prompt = 5;
  std::uint32_t iterations = 2;
  std::filesystem::path example_pool;  // empty: shipped pool
  std::filesystem::path concepts = "seeds/concepts.txt";
  std::filesystem::path cultures = "seeds/cultures.txt";
  bool clean_seeds = false;
};

struct FilterSection {
  std::filesystem::path blocklist;  // empty: shipped list
};

struct ConsolidateSection {
  consolidate::HacParams hac;
  std::string render_template = std::string(consolidate::kDefaultRenderTemplate);
  std::size_t top = 0;  // 0: no top-N file
  bool allow_bucket_failures = false;
};

struct DialogueSection {
  std::size_t narratives = 100;
  std::string task = "utterance";  // utterance | full
  std::string mode = "both";       // vanilla | ccsk | both
  std::size_t turn_cap = 12;
};

struct PipelineConfig {
  std::filesystem::path base_dir = ".";  // directory of the config file
  std::filesystem::path work_dir = ".";
  std::uint64_t seed = 0;
  std::size_t concurrency = 1;

  LlmSection llm;
  EmbeddingSection embedding;
  GenerationSection generation;
  FilterSection filter;
  ConsolidateSection consolidate;
  retrieval::RetrievalParams retrieval;
  DialogueSection dialogue;
};

// Parses an INI file ("[section]" headers, "key = value" lines, ';' or '#' comments). Relative
// paths, work_dir included, are taken from the config file's directory.
// Throws ConfigError naming the offending key path for unknown keys, malformed numbers or
// out-of-range values.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& ini_text, const std::filesystem::path& base_dir = ".");

// Range checks shared by the loader and command-line overrides.
void validate(const PipelineConfig& config);

// Resolves an input path against the config directory; empty stays empty.
std::filesystem::path resolve(const PipelineConfig& config, const std::filesystem::path& p);

// Directory holding the shipped example pool and blocklist.
std::filesystem::path data_dir();

}  // namespace mango::config

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mango/gateway.hpp"
#include "mango/kb.hpp"

namespace mango::generation {

// A human-written in-context example: one concept, two contrasting cultural views.
struct FewShotExample {
  std::string concept_name;
  std::string view_a;
  std::string view_b;

  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

void validate(const FewShotExample& example);

// Reads the example-pool file: one {"concept", "view_a", "view_b", "origin"} object per line.
std::vector<FewShotExample> load_example_pool(const std::filesystem::path& path);

struct GenerationConfig {
  std::uint32_t samples_per_prompt = 5;
  double temperature = 1.0;
  std::uint32_t examples_per_prompt = 5;
  std::vector<FewShotExample> example_pool;
  std::uint32_t iterations = 2;
  std::uint64_t rng_seed = 0;
  std::size_t concurrency = 1;
};

void validate(const GenerationConfig& config);

struct GenerationRecord {
  std::string id;
  kb::EntityKind entry_kind = kb::EntityKind::kConcept;
  std::string entry_value;
  std::uint32_t iteration = 0;
  std::uint32_t sample_index = 0;
  std::string raw_output;
  std::vector<kb::Assertion> parsed;
  std::uint64_t skipped = 0;  // entries dropped by the parser
  std::string error;          // non-empty when the prompt failed

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

std::string to_json_line(const GenerationRecord& record);
GenerationRecord record_from_json_line(std::string_view line, std::size_t line_no = 0);
std::vector<GenerationRecord> read_generation_log(const std::filesystem::path& path);
void write_generation_log(const std::filesystem::path& path, std::span<const GenerationRecord> log);

// k distinct examples drawn uniformly without replacement. Throws std::invalid_argument if
// k > pool size.
std::vector<FewShotExample> sample_examples(std::span<const FewShotExample> pool, std::size_t k,
                                            std::mt19937_64& rng);

std::string format_example(const FewShotExample& example);

// Concept-entry and culture-entry prompts. The entry is trimmed; empty entries throw
// std::invalid_argument. Requests come back with structured_output set, temperature 1.0 and
// sample_index 0.
llm::CompletionRequest build_concept_prompt(std::string_view concept_name,
                                            std::span<const FewShotExample> examples);
llm::CompletionRequest build_culture_prompt(std::string_view culture,
                                            std::span<const FewShotExample> examples);

struct ParsedOutput {
  std::vector<kb::Assertion> assertions;  // frequency 1, no provenance
  std::uint64_t skipped = 0;
};

// Accepts any JSON object/array layout exposing concept/culture/statement fields; a "concept"
// on an enclosing object applies to nested views. Entries lacking a field are skipped and
// counted. Throws ParseError (carrying the raw text) if no JSON value can be found at all.
ParsedOutput parse_generation_output(std::string_view raw);

struct NewEntities {
  kb::EntitySet concepts;
  kb::EntitySet cultures;
};

// Entities mentioned in `assertions` whose canonical keys are absent from `known`.
NewEntities extract_new_entities(std::span<const kb::Assertion> assertions, const kb::SeedSet& known);

struct IterationStats {
  std::uint32_t iteration = 0;
  std::size_t concepts_prompted = 0;
  std::size_t cultures_prompted = 0;
  std::size_t calls = 0;
  std::size_t failed_calls = 0;
  std::size_t concept_entry_assertions = 0;  // parsed, before merging
  std::size_t culture_entry_assertions = 0;
};

struct GenerationOutput {
  std::vector<kb::Assertion> assertions;  // merged duplicates
  std::vector<GenerationRecord> log;
  std::vector<IterationStats> iterations;
};

// Iterative two-entry generation. Iteration 1 prompts the seeds; each later iteration prompts
// the concepts discovered by culture-entry runs and the cultures discovered by concept-entry
// runs of the previous iteration. A failed prompt is logged and skipped.
GenerationOutput run_generation(const kb::SeedSet& seeds, const GenerationConfig& config,
                                llm::Gateway& gateway);

}  // namespace mango::generation

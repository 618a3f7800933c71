#include "mango/generation.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>

#include "json_util.hpp"
#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/parallel.hpp"
#include "mango/prompts.hpp"
#include "mango/text.hpp"

namespace mango::generation {

using detail::json;

void validate(const FewShotExample& example) {
  if (text::trim(example.concept_name).empty() || text::trim(example.view_a).empty() ||
      text::trim(example.view_b).empty()) {
    throw ValidationError("few-shot example has an empty field");
  }
  if (text::canonical_text(example.view_a) == text::canonical_text(example.view_b)) {
    throw ValidationError("few-shot example views must differ: " + example.concept_name);
  }
}

std::vector<FewShotExample> load_example_pool(const std::filesystem::path& path) {
  std::vector<FewShotExample> pool;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const json j = detail::parse_line(line, line_no);
    detail::require_fields(j, {"concept", "view_a", "view_b", "origin"}, line_no);
    FewShotExample e{detail::get_string(j, "concept", line_no), detail::get_string(j, "view_a", line_no),
                     detail::get_string(j, "view_b", line_no)};
    try {
      validate(e);
    } catch (const ValidationError& err) {
      throw ParseError(err.what(), line_no);
    }
    pool.push_back(std::move(e));
  }
  return pool;
}

void validate(const GenerationConfig& config) {
  if (config.samples_per_prompt == 0) throw std::invalid_argument("samples_per_prompt must be positive");
  if (config.examples_per_prompt == 0) throw std::invalid_argument("examples_per_prompt must be positive");
  if (config.iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (!(config.temperature >= 0.0 && config.temperature <= 2.0)) {
    throw std::invalid_argument("temperature must lie in [0, 2]");
  }
  if (config.examples_per_prompt > config.example_pool.size()) {
    throw std::invalid_argument("examples_per_prompt exceeds the example pool size");
  }
  for (const auto& e : config.example_pool) validate(e);
}

// ---------------------------------------------------------------------------------------------

std::string to_json_line(const GenerationRecord& r) {
  json j;
  j["id"] = r.id;
  j["entry_kind"] = std::string(kb::to_string(r.entry_kind));
  j["entry_value"] = r.entry_value;
  j["iteration"] = r.iteration;
  j["sample_index"] = r.sample_index;
  j["raw_output"] = r.raw_output;
  json parsed = json::array();
  for (const auto& a : r.parsed) parsed.push_back(detail::to_json(a));
  j["parsed"] = std::move(parsed);
  j["skipped"] = r.skipped;
  j["error"] = r.error;
  return detail::dump_line(j);
}

GenerationRecord record_from_json_line(std::string_view line, std::size_t line_no) {
  const json j = detail::parse_line(line, line_no);
  detail::require_fields(j,
                         {"id", "entry_kind", "entry_value", "iteration", "sample_index",
                          "raw_output", "parsed", "skipped", "error"},
                         line_no);
  GenerationRecord r;
  r.id = detail::get_string(j, "id", line_no);
  r.entry_kind = kb::entity_kind_from_string(detail::get_string(j, "entry_kind", line_no));
  r.entry_value = detail::get_string(j, "entry_value", line_no);
  r.iteration = static_cast<std::uint32_t>(detail::get_uint(j, "iteration", line_no));
  r.sample_index = static_cast<std::uint32_t>(detail::get_uint(j, "sample_index", line_no));
  r.raw_output = detail::get_string(j, "raw_output", line_no);
  if (!j.at("parsed").is_array()) throw ParseError("field \"parsed\" must be an array", line_no);
  for (const auto& a : j.at("parsed")) {
    r.parsed.push_back(detail::assertion_from_json(a, line_no));
    if (std::find(r.parsed.back().provenance.begin(), r.parsed.back().provenance.end(), r.id) ==
        r.parsed.back().provenance.end()) {
      throw ParseError("parsed assertion does not cite record " + r.id, line_no);
    }
  }
  r.skipped = detail::get_uint(j, "skipped", line_no);
  r.error = detail::get_string(j, "error", line_no);
  return r;
}

std::vector<GenerationRecord> read_generation_log(const std::filesystem::path& path) {
  std::vector<GenerationRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    out.push_back(record_from_json_line(line, line_no));
  }
  return out;
}

void write_generation_log(const std::filesystem::path& path, std::span<const GenerationRecord> log) {
  std::string content;
  for (const auto& r : log) {
    content += to_json_line(r);
    content += '\n';
  }
  io::write_file_atomic(path, content);
}

// ---------------------------------------------------------------------------------------------

std::vector<FewShotExample> sample_examples(std::span<const FewShotExample> pool, std::size_t k,
                                            std::mt19937_64& rng) {
  if (k > pool.size()) throw std::invalid_argument("cannot sample more examples than the pool holds");
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<FewShotExample> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(pool[idx[i]]);
  }
  return out;
}

std::string format_example(const FewShotExample& e) {
  return "* " + text::trim(e.concept_name) + " | " + text::trim(e.view_a) + " | " + text::trim(e.view_b);
}

namespace {

llm::CompletionRequest build_entry_prompt(std::string_view entry, std::string_view closing,
                                          std::span<const FewShotExample> examples) {
  const std::string value = text::trim(entry);
  if (value.empty()) throw std::invalid_argument("prompt entry must be non-empty");
  llm::CompletionRequest req;
  req.system_text = std::string(prompts::kAssertionPreamble) + "\n" + std::string(prompts::kAssertionFormat);
  req.user_text = std::string(prompts::kExamplesHeader) + "\n";
  for (const auto& e : examples) req.user_text += format_example(e) + "\n";
  req.user_text += std::string(closing) + value + ".";
  req.temperature = 1.0;
  req.structured_output = true;
  return req;
}

}  // namespace

llm::CompletionRequest build_concept_prompt(std::string_view concept_name,
                                            std::span<const FewShotExample> examples) {
  return build_entry_prompt(concept_name, prompts::kConceptClosing, examples);
}

llm::CompletionRequest build_culture_prompt(std::string_view culture,
                                            std::span<const FewShotExample> examples) {
  return build_entry_prompt(culture, prompts::kCultureClosing, examples);
}

// ---------------------------------------------------------------------------------------------

namespace {

const json* find_field(const json& obj, std::span<const std::string_view> names) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string key = text::ascii_lower(it.key());
    for (auto n : names) {
      if (key == n) return &it.value();
    }
  }
  return nullptr;
}

constexpr std::array<std::string_view, 2> kConceptKeys = {"concept", "topic"};
constexpr std::array<std::string_view, 4> kCultureKeys = {"culture", "cultural_group", "cultures",
                                                                  "group"};
constexpr std::array<std::string_view, 2> kStatementKeys = {"statement", "assertion"};

std::string string_or_empty(const json* v) {
  return v != nullptr && v->is_string() ? text::trim(v->get<std::string>()) : std::string{};
}

void walk(const json& node, const std::string& inherited_concept, ParsedOutput& out) {
  if (node.is_array()) {
    for (const auto& e : node) walk(e, inherited_concept, out);
    return;
  }
  if (!node.is_object()) return;

  const json* concept_v = find_field(node, kConceptKeys);
  const json* culture_v = find_field(node, kCultureKeys);
  const json* statement_v = find_field(node, kStatementKeys);
  std::string concept_name = concept_v ? string_or_empty(concept_v) : inherited_concept;

  if (culture_v == nullptr && statement_v == nullptr) {
    for (const auto& [key, value] : node.items()) {
      if (value.is_object() || value.is_array()) walk(value, concept_name, out);
    }
    return;
  }

  const std::string statement = string_or_empty(statement_v);
  std::vector<std::string> cultures;
  if (culture_v != nullptr && culture_v->is_array()) {
    for (const auto& c : *culture_v) {
      if (c.is_string() && !text::trim(c.get<std::string>()).empty()) {
        cultures.push_back(text::trim(c.get<std::string>()));
      }
    }
  } else if (auto c = string_or_empty(culture_v); !c.empty()) {
    cultures.push_back(std::move(c));
  }
  if (concept_name.empty() || statement.empty() || cultures.empty()) {
    ++out.skipped;
    return;
  }
  for (auto& c : cultures) {
    out.assertions.push_back(kb::Assertion{concept_name, std::move(c), statement, 1, {}});
  }
}

}  // namespace

ParsedOutput parse_generation_output(std::string_view raw) {
  const json root = detail::extract_json(raw);
  if (root.is_discarded()) {
    throw ParseError("provider output is not a structured object", 0, std::string(raw));
  }
  ParsedOutput out;
  walk(root, {}, out);
  return out;
}

NewEntities extract_new_entities(std::span<const kb::Assertion> assertions, const kb::SeedSet& known) {
  NewEntities out;
  for (const auto& a : assertions) {
    if (!known.concepts.contains(a.concept_name)) out.concepts.insert(a.concept_name);
    if (!known.cultures.contains(a.culture)) out.cultures.insert(a.culture);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

struct PendingCall {
  std::size_t record;
  llm::CompletionRequest request;
};

std::string record_id(std::size_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "gen-%06zu", seq);
  return buf;
}

}  // namespace

GenerationOutput run_generation(const kb::SeedSet& seeds, const GenerationConfig& config,
                                llm::Gateway& gateway) {
  validate(config);
  std::mt19937_64 rng(config.rng_seed);
  GenerationOutput out;

  kb::SeedSet known;
  for (const auto& c : seeds.concepts) known.concepts.insert(c);
  for (const auto& g : seeds.cultures) known.cultures.insert(g);

  kb::EntitySet concepts_to_prompt = seeds.concepts;
  kb::EntitySet cultures_to_prompt = seeds.cultures;
  std::vector<kb::Assertion> all_parsed;

  for (std::uint32_t iteration = 1; iteration <= config.iterations; ++iteration) {
    IterationStats stats;
    stats.iteration = iteration;
    stats.concepts_prompted = concepts_to_prompt.size();
    stats.cultures_prompted = cultures_to_prompt.size();

    // Build every request up front so the example draws are independent of scheduling.
    const std::size_t first_record = out.log.size();
    std::vector<PendingCall> calls;
    auto enqueue = [&](kb::EntityKind kind, const std::string& entry) {
      const auto examples = sample_examples(config.example_pool, config.examples_per_prompt, rng);
      llm::CompletionRequest base = kind == kb::EntityKind::kConcept
                                        ? build_concept_prompt(entry, examples)
                                        : build_culture_prompt(entry, examples);
      base.temperature = config.temperature;
      for (std::uint32_t s = 0; s < config.samples_per_prompt; ++s) {
        GenerationRecord rec;
        rec.id = record_id(out.log.size() + 1);
        rec.entry_kind = kind;
        rec.entry_value = entry;
        rec.iteration = iteration;
        rec.sample_index = s;
        llm::CompletionRequest req = base;
        req.sample_index = s;
        calls.push_back({out.log.size(), std::move(req)});
        out.log.push_back(std::move(rec));
      }
    };
    for (const auto& c : concepts_to_prompt) enqueue(kb::EntityKind::kConcept, c);
    for (const auto& g : cultures_to_prompt) enqueue(kb::EntityKind::kCulture, g);
    stats.calls = calls.size();

    parallel_for(calls.size(), config.concurrency, [&](std::size_t i) {
      GenerationRecord& rec = out.log[calls[i].record];
      try {
        rec.raw_output = gateway.complete(calls[i].request);
        ParsedOutput parsed = parse_generation_output(rec.raw_output);
        rec.skipped = parsed.skipped;
        for (auto& a : parsed.assertions) a.provenance = {rec.id};
        rec.parsed = std::move(parsed.assertions);
      } catch (const ParseError& e) {
        rec.error = std::string("parse: ") + e.what();
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    });

    std::vector<kb::Assertion> from_concepts;
    std::vector<kb::Assertion> from_cultures;
    for (std::size_t r = first_record; r < out.log.size(); ++r) {
      const auto& rec = out.log[r];
      if (!rec.error.empty()) ++stats.failed_calls;
      auto& sink = rec.entry_kind == kb::EntityKind::kConcept ? from_concepts : from_cultures;
      sink.insert(sink.end(), rec.parsed.begin(), rec.parsed.end());
    }
    stats.concept_entry_assertions = from_concepts.size();
    stats.culture_entry_assertions = from_cultures.size();
    all_parsed.insert(all_parsed.end(), from_concepts.begin(), from_concepts.end());
    all_parsed.insert(all_parsed.end(), from_cultures.begin(), from_cultures.end());
    out.iterations.push_back(stats);

    // Feed-forward harvest: cultures found by concept-entry runs, concepts by culture-entry runs.
    kb::EntitySet next_concepts = extract_new_entities(from_cultures, known).concepts;
    kb::EntitySet next_cultures = extract_new_entities(from_concepts, known).cultures;
    for (const auto& c : next_concepts) known.concepts.insert(c);
    for (const auto& g : next_cultures) known.cultures.insert(g);
    concepts_to_prompt = std::move(next_concepts);
    cultures_to_prompt = std::move(next_cultures);
  }

  out.assertions = kb::merge_duplicates(all_parsed);
  return out;
}

}  // namespace mango::generation

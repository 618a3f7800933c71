#include "mango/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"
#include "mango/consolidate.hpp"
#include "mango/dialogue.hpp"
#include "mango/errors.hpp"
#include "mango/filtering.hpp"
#include "mango/generation.hpp"
#include "mango/io.hpp"
#include "mango/parallel.hpp"
#include "mango/retrieval.hpp"
#include "mango/text.hpp"

namespace mango::pipeline {

using detail::json;

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::kGenerate, "generate"}, {Stage::kFilter, "filter"},       {Stage::kConsolidate, "consolidate"},
    {Stage::kIndex, "index"},       {Stage::kRetrieve, "retrieve"},   {Stage::kDialogue, "dialogue"},
    {Stage::kStats, "stats"}};

}  // namespace

std::string_view to_string(Stage stage) {
  for (const auto& [s, name] : kStageNames) {
    if (s == stage) return name;
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  for (const auto& [s, n] : kStageNames) {
    if (n == name) return s;
  }
  throw std::invalid_argument("unknown stage \"" + std::string(name) + "\"");
}

std::string stats_file(Stage stage) { return std::string(to_string(stage)) + ".stats.json"; }

std::uint64_t stage_seed(std::uint64_t run_seed, Stage stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(stage)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

std::string api_key(const std::string& env_name, const char* key_path) {
  const char* v = std::getenv(env_name.c_str());
  if (v == nullptr || *v == '\0') {
    throw ConfigError(key_path, "environment variable " + env_name + " is not set");
  }
  return v;
}

}  // namespace

std::shared_ptr<llm::Gateway> make_gateway(const RunContext& ctx) {
  const auto& c = ctx.config;
  llm::GatewayOptions options;
  options.mode = c.llm.mode;
  options.model_id = c.llm.model;
  options.limits = {c.llm.tokens_per_minute, c.llm.requests_per_minute};
  options.retry.max_attempts = c.llm.max_attempts;
  options.prices = {c.llm.price_input_per_million / 1e6, c.llm.price_output_per_million / 1e6};
  options.jitter_seed = c.seed;

  std::shared_ptr<llm::RecordReplayStore> store;
  if (c.llm.mode != llm::GatewayMode::kLive) {
    store = std::make_shared<llm::RecordReplayStore>(
        config::resolve(c, c.llm.replay_dir),
        c.llm.mode == llm::GatewayMode::kReplay ? llm::StoreMode::kReplay : llm::StoreMode::kRecord);
  }
  std::shared_ptr<llm::ChatBackend> backend = ctx.chat_backend;
  if (!backend && c.llm.mode != llm::GatewayMode::kReplay) {
    backend = std::make_shared<llm::HttpChatBackend>(llm::HttpBackendConfig{
        c.llm.endpoint, c.llm.model, api_key(c.llm.api_key_env, "llm.api_key_env"),
        std::chrono::seconds(c.llm.timeout_seconds)});
  }
  auto clock = ctx.clock ? ctx.clock : std::make_shared<llm::SystemClock>();
  return std::make_shared<llm::Gateway>(options, backend, store, clock);
}

std::shared_ptr<embedding::Embedder> make_embedder(const RunContext& ctx) {
  const auto& c = ctx.config;
  std::shared_ptr<embedding::EmbeddingProvider> provider = ctx.embedding_provider;
  if (!provider) {
    if (c.embedding.provider == config::EmbedderKind::kStub) {
      provider = std::make_shared<embedding::HashingProvider>(c.embedding.dimension);
    } else {
      provider = std::make_shared<embedding::HttpEmbeddingProvider>(embedding::HttpEmbeddingConfig{
          c.embedding.endpoint, c.embedding.model, api_key(c.embedding.api_key_env, "embedding.api_key_env"),
          c.embedding.dimension, std::chrono::seconds(c.llm.timeout_seconds)});
    }
  }
  auto cache = std::make_shared<embedding::EmbeddingCache>(config::resolve(c, c.embedding.cache),
                                                           provider->identity(), provider->dimension());
  return std::make_shared<embedding::Embedder>(provider, cache);
}

// ---------------------------------------------------------------------------------------------

namespace {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

std::filesystem::path work_file(const RunContext& ctx, std::string_view name) {
  return ctx.config.work_dir / std::string(name);
}

std::filesystem::path require_input(const RunContext& ctx, std::string_view name) {
  auto p = work_file(ctx, name);
  if (!std::filesystem::exists(p)) throw Error("missing input " + p.string() + "; run the earlier stage first");
  return p;
}

json usage_json(const llm::Gateway& gateway) {
  const auto u = gateway.ledger();
  json j;
  j["requests"] = u.requests;
  j["cache_hits"] = u.cache_hits;
  j["prompt_tokens"] = u.prompt_tokens;
  j["completion_tokens"] = u.completion_tokens;
  j["estimated_cost"] = u.estimated_cost;
  return j;
}

void write_stats(const RunContext& ctx, Stage stage, const json& stats) {
  io::write_file_atomic(work_file(ctx, stats_file(stage)), stats.dump(2) + "\n");
}

template <typename T, typename Fn>
std::string jsonl(std::span<const T> records, Fn&& encode) {
  std::string out;
  for (const auto& r : records) {
    out += encode(r);
    out += '\n';
  }
  return out;
}

void warn_all(Io& io, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) io.err << "warning: " << w << "\n";
}

// --- generate ----------------------------------------------------------------------------------

void run_generate(const RunContext& ctx, Io& io) {
  const auto& c = ctx.config;
  const auto concepts_path = config::resolve(c, c.generation.concepts);
  const auto cultures_path = config::resolve(c, c.generation.cultures);
  for (const auto& p : {concepts_path, cultures_path}) {
    if (!std::filesystem::exists(p)) throw Error("missing seed file " + p.string());
  }
  auto gateway = make_gateway(ctx);

  kb::SeedSet seeds;
  std::vector<std::string> concept_list = io::read_list_file(concepts_path);
  json cleaning = nullptr;
  if (c.generation.clean_seeds) {
    auto cleaned = filtering::clean_seed_concepts(concept_list, *gateway);
    warn_all(io, cleaned.warnings);
    cleaning = json{{"kept", cleaned.kept.size()},
                    {"dropped", cleaned.dropped.size()},
                    {"failed_batches", cleaned.failed_batches}};
    concept_list = std::move(cleaned.kept);
  }
  for (const auto& s : concept_list) seeds.concepts.insert(s);
  for (const auto& s : io::read_list_file(cultures_path)) seeds.cultures.insert(s);

  generation::GenerationConfig gc;
  gc.samples_per_prompt = c.generation.samples_per_prompt;
  gc.temperature = c.generation.temperature;
  gc.examples_per_prompt = c.generation.examples_per_prompt;
  gc.iterations = c.generation.iterations;
  gc.rng_seed = stage_seed(c.seed, Stage::kGenerate);
  gc.concurrency = c.concurrency;
  const auto pool_path = c.generation.example_pool.empty() ? config::data_dir() / "example_pool.jsonl"
                                                           : config::resolve(c, c.generation.example_pool);
  gc.example_pool = generation::load_example_pool(pool_path);

  auto result = generation::run_generation(seeds, gc, *gateway);

  std::size_t calls = 0;
  std::size_t failed = 0;
  json iterations = json::array();
  std::size_t concepts_prompted = 0, cultures_prompted = 0, from_concepts = 0, from_cultures = 0;
  for (const auto& it : result.iterations) {
    calls += it.calls;
    failed += it.failed_calls;
    concepts_prompted += it.concepts_prompted;
    cultures_prompted += it.cultures_prompted;
    from_concepts += it.concept_entry_assertions;
    from_cultures += it.culture_entry_assertions;
    iterations.push_back(json{{"iteration", it.iteration},
                              {"concepts_prompted", it.concepts_prompted},
                              {"cultures_prompted", it.cultures_prompted},
                              {"calls", it.calls},
                              {"failed_calls", it.failed_calls},
                              {"concept_entry_assertions", it.concept_entry_assertions},
                              {"culture_entry_assertions", it.culture_entry_assertions}});
  }
  for (const auto& rec : result.log) {
    if (!rec.error.empty()) io.err << "warning: " << rec.id << " (" << rec.entry_value << "): " << rec.error << "\n";
  }
  if (calls > 0 && failed == calls) throw Error("every generation call failed");

  kb::write_assertions(work_file(ctx, files::kRawAssertions), result.assertions);
  generation::write_generation_log(work_file(ctx, files::kGenerationLog), result.log);

  json stats;
  stats["runs"] = result.iterations.size();
  stats["concepts_prompted"] = concepts_prompted;
  stats["cultures_prompted"] = cultures_prompted;
  stats["concept_entry_assertions"] = from_concepts;
  stats["culture_entry_assertions"] = from_cultures;
  stats["distinct_assertions"] = result.assertions.size();
  stats["calls"] = calls;
  stats["failed_calls"] = failed;
  stats["iterations"] = std::move(iterations);
  stats["seed_cleaning"] = std::move(cleaning);
  stats["usage"] = usage_json(*gateway);
  write_stats(ctx, Stage::kGenerate, stats);
  io.out << "generate: " << result.assertions.size() << " distinct assertions from " << calls << " calls\n";
}

// --- filter --------------------------------------------------------------------------------------

void run_filter(const RunContext& ctx, Io& io) {
  const auto& c = ctx.config;
  const auto input = kb::read_assertions(require_input(ctx, files::kRawAssertions));
  const auto blocklist = c.filter.blocklist.empty()
                             ? filtering::CultureBlocklist::from_file(config::data_dir() / "blocklist.txt")
                             : filtering::CultureBlocklist::from_file(config::resolve(c, c.filter.blocklist));
  const auto report = filtering::apply_filters(input, blocklist);

  kb::write_assertions(work_file(ctx, files::kFiltered), report.kept);
  io::write_file_atomic(work_file(ctx, files::kRejected),
                        jsonl(std::span<const filtering::Rejection>(report.rejected),
                              [](const filtering::Rejection& r) { return filtering::to_json_line(r); }));
  json stats;
  stats["input"] = input.size();
  stats["input_frequency"] = kb::total_frequency(input);
  stats["kept"] = report.kept.size();
  stats["kept_frequency"] = kb::total_frequency(report.kept);
  json reasons;
  for (auto r : filtering::kAllReasons) reasons[std::string(filtering::to_string(r))] = report.count(r);
  stats["rejected"] = std::move(reasons);
  write_stats(ctx, Stage::kFilter, stats);
  io.out << "filter: kept " << report.kept.size() << " of " << input.size() << "\n";
}

// --- consolidate -------------------------------------------------------------------------------

void run_consolidate(const RunContext& ctx, Io& io) {
  const auto& c = ctx.config;
  const auto input = kb::read_assertions(require_input(ctx, files::kFiltered));
  auto embedder = make_embedder(ctx);
  auto gateway = make_gateway(ctx);
  consolidate::ConsolidateOptions options;
  options.params = c.consolidate.hac;
  options.render_template = c.consolidate.render_template;
  options.concurrency = c.concurrency;
  auto out = consolidate::consolidate_all(input, *embedder, *gateway, options);

  for (const auto& f : out.failures) io.err << "bucket " << f.bucket << " failed: " << f.message << "\n";
  warn_all(io, out.warnings);
  if (!out.failures.empty() && !c.consolidate.allow_bucket_failures) {
    throw Error(std::to_string(out.failures.size()) +
                " bucket(s) failed; set consolidate.allow_bucket_failures to keep singleton fallbacks");
  }
  if (kb::total_frequency(out.clusters) != kb::total_frequency(input)) {
    throw Error("frequency not conserved during consolidation");
  }

  kb::write_clusters(work_file(ctx, files::kKnowledgeBase), out.clusters);
  kb::write_entity_clusters(work_file(ctx, files::kConceptClusters), out.concept_clusters);
  kb::write_entity_clusters(work_file(ctx, files::kCultureClusters), out.culture_clusters);
  if (c.consolidate.top > 0) {
    kb::write_clusters(work_file(ctx, files::kKnowledgeBaseTop), consolidate::select_top(out.clusters, c.consolidate.top));
  }

  std::size_t singletons = 0;
  for (const auto& cl : out.clusters) singletons += cl.members.size() == 1 ? 1 : 0;
  json stats;
  stats["input_assertions"] = input.size();
  stats["input_frequency"] = kb::total_frequency(input);
  stats["concept_clusters"] = out.concept_clusters.size();
  stats["culture_clusters"] = out.culture_clusters.size();
  stats["buckets"] = out.bucket_count;
  stats["assertion_clusters"] = out.clusters.size();
  stats["singleton_clusters"] = singletons;
  stats["representatives"] = out.clusters.size();
  stats["representative_calls"] = out.representative_calls;
  stats["representative_fallbacks"] = out.fallbacks;
  stats["bucket_failures"] = out.failures.size();
  stats["threshold"] = c.consolidate.hac.distance_threshold;
  stats["embedder"] = embedder->identity();
  stats["usage"] = usage_json(*gateway);
  write_stats(ctx, Stage::kConsolidate, stats);
  io.out << "consolidate: " << out.clusters.size() << " clusters from " << input.size() << " assertions\n";
}

// --- index / retrieve --------------------------------------------------------------------------

void run_index(const RunContext& ctx, Io& io) {
  const auto kb_records = kb::read_clusters(require_input(ctx, files::kKnowledgeBase));
  auto embedder = make_embedder(ctx);
  const auto index = retrieval::build_index(kb_records, *embedder);
  index.save(work_file(ctx, files::kIndex));
  write_stats(ctx, Stage::kIndex, json{{"entries", index.size()}, {"embedder", index.identity()},
                                       {"dimension", index.dimension()}});
  io.out << "index: " << index.size() << " entries\n";
}

json hits_json(const retrieval::RetrievalResult& r) {
  json hits = json::array();
  for (const auto& h : r.hits) {
    hits.push_back(json{{"cluster_id", h.cluster_id}, {"statement", h.statement}, {"similarity", h.similarity}});
  }
  return hits;
}

std::vector<dialogue::Narrative> read_narratives_or_text(const std::filesystem::path& path, bool& plain) {
  plain = false;
  try {
    return dialogue::read_narratives(path);
  } catch (const ParseError&) {
    plain = true;
    return {};
  }
}

void run_retrieve(const RunContext& ctx, const StageOptions& options, Io& io) {
  if (options.narrative_file.empty()) throw Error("retrieve needs --narrative <file>");
  if (!std::filesystem::exists(options.narrative_file)) {
    throw Error("missing narrative file " + options.narrative_file.string());
  }
  const auto index = retrieval::RetrievalIndex::load(require_input(ctx, files::kIndex));
  auto embedder = make_embedder(ctx);
  bool plain = false;
  auto narratives = read_narratives_or_text(options.narrative_file, plain);
  if (plain) {
    io.err << "warning: narrative file is not JSONL with participants; querying the raw text unanonymized\n";
    const auto r = retrieval::retrieve_text(text::trim(io::read_file(options.narrative_file)), index, *embedder,
                                            ctx.config.retrieval);
    io.out << detail::dump_line(json{{"query", r.query_text}, {"hits", hits_json(r)}}) << "\n";
    return;
  }
  for (const auto& n : narratives) {
    const auto r = retrieval::retrieve(n, index, *embedder, ctx.config.retrieval);
    warn_all(io, r.warnings);
    io.out << detail::dump_line(json{{"narrative_id", n.id}, {"query", r.query_text}, {"hits", hits_json(r)}})
           << "\n";
  }
}

// --- dialogue ------------------------------------------------------------------------------------

std::string render_turns(std::span<const dialogue::Turn> turns) {
  std::string s;
  for (const auto& t : turns) s += t.speaker + ": " + t.utterance + "\n";
  return s;
}

void run_dialogue(const RunContext& ctx, const StageOptions& options, Io& io) {
  const auto& c = ctx.config;
  const bool want_vanilla = c.dialogue.mode != "ccsk";
  const bool want_ccsk = c.dialogue.mode != "vanilla";
  auto gateway = make_gateway(ctx);

  std::vector<dialogue::Narrative> narratives;
  std::size_t narrative_calls = 0;
  if (!options.narrative_file.empty()) {
    narratives = dialogue::read_narratives(options.narrative_file);
  } else {
    auto batch = dialogue::generate_narratives(c.dialogue.narratives, *gateway, c.concurrency);
    warn_all(io, batch.warnings);
    narratives = std::move(batch.narratives);
    narrative_calls = batch.gateway_calls;
  }

  std::vector<retrieval::RetrievalResult> knowledge(narratives.size());
  if (want_ccsk) {
    const auto index = retrieval::RetrievalIndex::load(require_input(ctx, files::kIndex));
    auto embedder = make_embedder(ctx);
    for (std::size_t i = 0; i < narratives.size(); ++i) {
      knowledge[i] = retrieval::retrieve(narratives[i], index, *embedder, c.retrieval);
      warn_all(io, knowledge[i].warnings);
    }
  }

  struct Item {
    std::optional<dialogue::Dialogue> vanilla;
    std::optional<dialogue::Dialogue> ccsk;
    std::string context;
    bool no_ccsk = false;
    bool skipped = false;
    std::string warning;
  };
  std::vector<Item> items(narratives.size());
  const bool full = c.dialogue.task == "full";

  parallel_for(narratives.size(), c.concurrency, [&](std::size_t i) {
    const auto& n = narratives[i];
    Item& item = items[i];
    const auto& hits = knowledge[i].hits;
    try {
      if (full) {
        item.context = n.text;
        if (want_vanilla) {
          auto r = dialogue::full_dialogue(n, dialogue::Mode::kVanilla, {}, *gateway, c.dialogue.turn_cap);
          item.vanilla = std::move(r.dialogue);
          if (!r.warning.empty()) item.warning = r.warning;
        }
        if (want_ccsk) {
          auto r = dialogue::full_dialogue(n, dialogue::Mode::kCcsk, hits, *gateway, c.dialogue.turn_cap);
          item.ccsk = std::move(r.dialogue);
          item.no_ccsk = r.no_ccsk;
          if (!r.warning.empty()) item.warning = r.warning;
        }
        return;
      }
      auto seed = dialogue::seed_dialogue(n, *gateway);
      if (!seed) {
        item.skipped = true;
        item.warning = n.id + ": seed dialogue has fewer than three usable turns";
        return;
      }
      item.context = n.text + "\n\n" + render_turns(seed->turns);
      auto extend = [&](dialogue::Mode mode) -> std::optional<dialogue::Dialogue> {
        auto r = dialogue::next_utterance(n, seed->turns, mode, mode == dialogue::Mode::kCcsk ? std::span(hits)
                                                                                            : std::span<const retrieval::RetrievalHit>{},
                                          *gateway);
        if (r.no_ccsk) {
          item.no_ccsk = true;
          return std::nullopt;
        }
        dialogue::Dialogue d = *seed;
        d.mode = mode;
        d.turns.push_back(r.turn);
        d.injected_ccsk = r.injected_ccsk;
        return d;
      };
      if (want_vanilla) item.vanilla = extend(dialogue::Mode::kVanilla);
      if (want_ccsk) item.ccsk = extend(dialogue::Mode::kCcsk);
    } catch (const CacheMissError&) {
      throw;
    } catch (const std::exception& e) {
      item.skipped = true;
      item.warning = n.id + ": " + e.what();
    }
  });

  std::string dialogues;
  std::string retrievals;
  std::vector<dialogue::EvalPair> pairs;
  std::size_t vanilla_count = 0, ccsk_count = 0, no_ccsk = 0, skipped = 0;
  for (std::size_t i = 0; i < narratives.size(); ++i) {
    Item& item = items[i];
    if (!item.warning.empty()) io.err << "warning: " << item.warning << "\n";
    if (want_ccsk) {
      retrievals += detail::dump_line(json{{"narrative_id", narratives[i].id},
                                           {"query", knowledge[i].query_text},
                                           {"hits", hits_json(knowledge[i])}}) + "\n";
    }
    no_ccsk += item.no_ccsk ? 1 : 0;
    skipped += item.skipped ? 1 : 0;
    if (item.vanilla) {
      dialogues += dialogue::to_json_line(*item.vanilla) + "\n";
      ++vanilla_count;
    }
    if (item.ccsk) {
      dialogues += dialogue::to_json_line(*item.ccsk) + "\n";
      ++ccsk_count;
    }
    if (item.vanilla && item.ccsk) {
      // Utterance task compares the new reply only; full task compares whole transcripts.
      auto output = [&](const dialogue::Dialogue& d) {
        return full ? render_turns(d.turns) : render_turns(std::span(d.turns).last(1));
      };
      pairs.push_back({narratives[i].id, item.context, output(*item.vanilla), output(*item.ccsk)});
    }
  }

  const std::string task = c.dialogue.task;
  if (options.narrative_file.empty()) dialogue::write_narratives(work_file(ctx, files::kNarratives), narratives);
  if (want_ccsk) io::write_file_atomic(work_file(ctx, files::kRetrievals), retrievals);
  io::write_file_atomic(work_file(ctx, "dialogues." + task + ".jsonl"), dialogues);
  if (want_vanilla && want_ccsk) {
    std::mt19937_64 rng(stage_seed(c.seed, Stage::kDialogue));
    const auto bundle = dialogue::export_eval_bundle(pairs, rng);
    dialogue::write_eval_bundle(bundle, work_file(ctx, "eval_bundle." + task + ".jsonl"),
                                work_file(ctx, "eval_key." + task + ".jsonl"));
  }

  json stats;
  stats["task"] = task;
  stats["mode"] = c.dialogue.mode;
  stats["narratives"] = narratives.size();
  stats["narrative_calls"] = narrative_calls;
  stats["vanilla_outputs"] = vanilla_count;
  stats["ccsk_outputs"] = ccsk_count;
  stats["no_ccsk"] = no_ccsk;
  stats["skipped"] = skipped;
  stats["eval_items"] = pairs.size();
  stats["usage"] = usage_json(*gateway);
  write_stats(ctx, Stage::kDialogue, stats);
  io.out << "dialogue: " << narratives.size() << " narratives, " << pairs.size() << " paired items\n";
}

// --- stats ---------------------------------------------------------------------------------------

json read_stats(const RunContext& ctx, Stage stage) {
  const auto p = work_file(ctx, stats_file(stage));
  if (!std::filesystem::exists(p)) return nullptr;
  return json::parse(io::read_file(p));
}

std::string count(const json& stats, const char* key) {
  if (stats.is_null() || !stats.contains(key)) return "-";
  return stats.at(key).dump();
}

void run_stats(const RunContext& ctx, Io& io) {
  const json gen = read_stats(ctx, Stage::kGenerate);
  const json filt = read_stats(ctx, Stage::kFilter);
  const json cons = read_stats(ctx, Stage::kConsolidate);
  const std::string runs = gen.is_null() ? "" : " (" + count(gen, "runs") + " runs)";

  struct Row {
    std::string step, input, output;
  };
  const std::vector<Row> rows = {
      {"Step 1a" + runs, count(gen, "concepts_prompted") + " concepts",
       count(gen, "concept_entry_assertions") + " assertions"},
      {"Step 1b" + runs, count(gen, "cultures_prompted") + " cultures",
       count(gen, "culture_entry_assertions") + " assertions"},
      {"Step 2a", count(filt, "kept") + " filtered assertions", count(cons, "assertion_clusters") + " assertion clusters"},
      {"Step 2b", count(cons, "assertion_clusters") + " assertion clusters",
       count(cons, "representatives") + " full CCSK sentences"},
  };
  std::size_t w0 = 4, w1 = 5;
  for (const auto& r : rows) {
    w0 = std::max(w0, r.step.size());
    w1 = std::max(w1, r.input.size());
  }
  io.out << std::left << std::setw(static_cast<int>(w0)) << "Step" << "  " << std::setw(static_cast<int>(w1))
         << "Input" << "  Output\n";
  for (const auto& r : rows) {
    io.out << std::setw(static_cast<int>(w0)) << r.step << "  " << std::setw(static_cast<int>(w1)) << r.input << "  "
           << r.output << "\n";
  }
  if (!filt.is_null()) {
    io.out << "\nfilter: " << count(filt, "kept") << " of " << count(filt, "input") << " kept; rejected "
           << filt.at("rejected").dump() << "\n";
  }
  if (!cons.is_null()) {
    io.out << "consolidate: " << count(cons, "concept_clusters") << " concept clusters, "
           << count(cons, "culture_clusters") << " culture clusters, " << count(cons, "buckets") << " buckets\n";
  }
  for (Stage s : {Stage::kGenerate, Stage::kConsolidate, Stage::kDialogue}) {
    const json st = read_stats(ctx, s);
    if (!st.is_null() && st.contains("usage")) io.out << to_string(s) << " usage: " << st.at("usage").dump() << "\n";
  }
}

}  // namespace

int run_stage(Stage stage, const RunContext& ctx, const StageOptions& options) {
  Io io{ctx.out ? *ctx.out : std::cout, ctx.err ? *ctx.err : std::cerr};
  try {
    config::validate(ctx.config);
    std::filesystem::create_directories(ctx.config.work_dir);
    switch (stage) {
      case Stage::kGenerate: run_generate(ctx, io); break;
      case Stage::kFilter: run_filter(ctx, io); break;
      case Stage::kConsolidate: run_consolidate(ctx, io); break;
      case Stage::kIndex: run_index(ctx, io); break;
      case Stage::kRetrieve: run_retrieve(ctx, options, io); break;
      case Stage::kDialogue: run_dialogue(ctx, options, io); break;
      case Stage::kStats: run_stats(ctx, io); break;
    }
    return kOk;
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    io.err << to_string(stage) << " failed: " << e.what() << "\n";
    return kStageError;
  }
}

}  // namespace mango::pipeline

// mango: runs one pipeline stage against a config file.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "mango/config.hpp"
#include "mango/errors.hpp"
#include "mango/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string work_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> concurrency;
  std::optional<std::string> llm_mode;
  std::optional<std::string> embedder;
  std::optional<std::uint32_t> samples;
  std::optional<std::uint32_t> iterations;
  std::optional<std::string> blocklist;
  std::optional<double> threshold;
  std::optional<std::size_t> top;
  std::optional<std::string> render_template;
  std::optional<std::size_t> k;
  std::optional<double> min_sim;
  std::optional<std::string> task;
  std::optional<std::string> mode;
  std::optional<std::size_t> n;
  std::string narrative_file;
};

mango::config::PipelineConfig build_config(const Overrides& o) {
  using mango::ConfigError;
  mango::config::PipelineConfig c =
      o.config_path.empty() ? mango::config::parse_config("") : mango::config::load_config(o.config_path);
  if (!o.work_dir.empty()) c.work_dir = o.work_dir;
  if (o.seed) c.seed = *o.seed;
  if (o.concurrency) c.concurrency = *o.concurrency;
  if (o.llm_mode) {
    if (*o.llm_mode == "live") c.llm.mode = mango::llm::GatewayMode::kLive;
    else if (*o.llm_mode == "record") c.llm.mode = mango::llm::GatewayMode::kRecord;
    else c.llm.mode = mango::llm::GatewayMode::kReplay;
  }
  if (o.embedder) {
    c.embedding.provider =
        *o.embedder == "remote" ? mango::config::EmbedderKind::kRemote : mango::config::EmbedderKind::kStub;
  }
  if (o.samples) c.generation.samples_per_prompt = *o.samples;
  if (o.iterations) c.generation.iterations = *o.iterations;
  if (o.blocklist) c.filter.blocklist = *o.blocklist;
  if (o.threshold) c.consolidate.hac.distance_threshold = *o.threshold;
  if (o.top) c.consolidate.top = *o.top;
  if (o.render_template) c.consolidate.render_template = *o.render_template;
  if (o.k) c.retrieval.k = *o.k;
  if (o.min_sim) c.retrieval.min_similarity = *o.min_sim;
  if (o.task) c.dialogue.task = *o.task;
  if (o.mode) c.dialogue.mode = *o.mode;
  if (o.n) c.dialogue.narratives = *o.n;
  mango::config::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cultural commonsense knowledge pipeline"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--work-dir", o.work_dir, "Directory holding stage files");
    sub->add_option("--seed", o.seed, "Run seed");
    sub->add_option("--concurrency", o.concurrency, "Parallel requests");
    sub->add_option("--llm-mode", o.llm_mode, "live, record or replay")
        ->check(CLI::IsMember({"live", "record", "replay"}));
  };
  auto embedder = [&](CLI::App* sub) {
    sub->add_option("--embedder", o.embedder, "Sentence encoder")->check(CLI::IsMember({"stub", "remote"}));
  };

  auto* gen = app.add_subcommand("generate", "Prompt for assertions from seed concepts and cultures");
  common(gen);
  gen->add_option("--samples", o.samples, "Samples per prompt");
  gen->add_option("--iterations", o.iterations, "Generation runs");

  auto* filt = app.add_subcommand("filter", "Drop malformed assertions and vague cultures");
  common(filt);
  filt->add_option("--blocklist", o.blocklist, "Culture blocklist file");

  auto* cons = app.add_subcommand("consolidate", "Cluster assertions and write the knowledge base");
  common(cons);
  embedder(cons);
  cons->add_option("--threshold", o.threshold, "Ward distance threshold");
  cons->add_option("--top", o.top, "Also write the N most frequent clusters");
  cons->add_option("--render-template", o.render_template, "Text embedded per assertion");

  auto* idx = app.add_subcommand("index", "Embed representative statements for retrieval");
  common(idx);
  embedder(idx);

  auto* ret = app.add_subcommand("retrieve", "Query the index with narratives");
  common(ret);
  embedder(ret);
  ret->add_option("--narrative", o.narrative_file, "Narratives JSONL or a plain-text narrative")->required();
  ret->add_option("--k", o.k, "Results per query");
  ret->add_option("--min-sim", o.min_sim, "Similarity floor (strict)");

  auto* dia = app.add_subcommand("dialogue", "Generate dialogues with and without retrieved knowledge");
  common(dia);
  embedder(dia);
  dia->add_option("--task", o.task, "utterance or full")->check(CLI::IsMember({"utterance", "full"}));
  dia->add_option("--mode", o.mode, "vanilla, ccsk or both")->check(CLI::IsMember({"vanilla", "ccsk", "both"}));
  dia->add_option("--n", o.n, "Narratives to generate");
  dia->add_option("--narratives", o.narrative_file, "Use these narratives instead of generating");
  dia->add_option("--k", o.k, "Retrieved statements per narrative");
  dia->add_option("--min-sim", o.min_sim, "Similarity floor (strict)");

  auto* stats = app.add_subcommand("stats", "Print per-step input and output counts");
  common(stats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mango::pipeline::kConfigError;
  }

  mango::pipeline::RunContext ctx;
  try {
    ctx.config = build_config(o);
  } catch (const mango::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mango::pipeline::kConfigError;
  }

  const std::string stage_name = app.get_subcommands().front()->get_name();
  mango::pipeline::StageOptions options;
  options.narrative_file = o.narrative_file;
  return mango::pipeline::run_stage(mango::pipeline::stage_from_string(stage_name), ctx, options);
}

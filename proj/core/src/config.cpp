#include "mango/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/text.hpp"

namespace mango::config {

namespace pt = boost::property_tree;

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("MANGO_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return MANGO_DEFAULT_DATA_DIR;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string v = text::trim(raw);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "not a valid number: \"" + v + "\"");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = text::ascii_lower(text::trim(raw));
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(key, "not a boolean: \"" + v + "\"");
}

std::string unquote(const std::string& raw) {
  std::string v = text::trim(raw);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.work_dir", [](PipelineConfig& c, const std::string&, const std::string& v) { c.work_dir = unquote(v); }},
      {"run.seed", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_number<std::uint64_t>(k, v);
       }},
      {"run.concurrency", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.concurrency = parse_number<std::size_t>(k, v);
       }},

      {"llm.mode", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         const std::string m = unquote(v);
         if (m == "live") c.llm.mode = llm::GatewayMode::kLive;
         else if (m == "record") c.llm.mode = llm::GatewayMode::kRecord;
         else if (m == "replay") c.llm.mode = llm::GatewayMode::kReplay;
         else throw ConfigError(k, "expected live, record or replay");
       }},
      {"llm.model", [](PipelineConfig& c, const std::string&, const std::string& v) { c.llm.model = unquote(v); }},
      {"llm.endpoint", [](PipelineConfig& c, const std::string&, const std::string& v) { c.llm.endpoint = unquote(v); }},
      {"llm.api_key_env",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.llm.api_key_env = unquote(v); }},
      {"llm.replay_dir",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.llm.replay_dir = unquote(v); }},
      {"llm.tokens_per_minute", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.llm.tokens_per_minute = parse_number<std::uint64_t>(k, v);
       }},
      {"llm.requests_per_minute", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.llm.requests_per_minute = parse_number<std::uint64_t>(k, v);
       }},
      {"llm.price_input_per_million", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.llm.price_input_per_million = parse_number<double>(k, v);
       }},
      {"llm.price_output_per_million", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.llm.price_output_per_million = parse_number<double>(k, v);
       }},
      {"llm.max_attempts", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.llm.max_attempts = parse_number<int>(k, v);
       }},
      {"llm.timeout_seconds", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.llm.timeout_seconds = parse_number<int>(k, v);
       }},

      {"embedding.provider", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         const std::string p = unquote(v);
         if (p == "stub") c.embedding.provider = EmbedderKind::kStub;
         else if (p == "remote") c.embedding.provider = EmbedderKind::kRemote;
         else throw ConfigError(k, "expected stub or remote");
       }},
      {"embedding.dimension", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.embedding.dimension = parse_number<std::size_t>(k, v);
       }},
      {"embedding.endpoint",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.embedding.endpoint = unquote(v); }},
      {"embedding.model",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.embedding.model = unquote(v); }},
      {"embedding.api_key_env",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.embedding.api_key_env = unquote(v); }},
      {"embedding.cache",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.embedding.cache = unquote(v); }},

      {"generation.samples_per_prompt", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.generation.samples_per_prompt = parse_number<std::uint32_t>(k, v);
       }},
      {"generation.temperature", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.generation.temperature = parse_number<double>(k, v);
       }},
      {"generation.examples_per_prompt", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.generation.examples_per_prompt = parse_number<std::uint32_t>(k, v);
       }},
      {"generation.iterations", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.generation.iterations = parse_number<std::uint32_t>(k, v);
       }},
      {"generation.example_pool",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.generation.example_pool = unquote(v); }},
      {"generation.concepts",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.generation.concepts = unquote(v); }},
      {"generation.cultures",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.generation.cultures = unquote(v); }},
      {"generation.clean_seeds", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.generation.clean_seeds = parse_bool(k, v);
       }},

      {"filter.blocklist",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.filter.blocklist = unquote(v); }},

      {"consolidate.threshold", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.consolidate.hac.distance_threshold = parse_number<double>(k, v);
       }},
      {"consolidate.render_template", [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.consolidate.render_template = unquote(v);
       }},
      {"consolidate.top", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.consolidate.top = parse_number<std::size_t>(k, v);
       }},
      {"consolidate.allow_bucket_failures", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.consolidate.allow_bucket_failures = parse_bool(k, v);
       }},

      {"retrieval.k", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.retrieval.k = parse_number<std::size_t>(k, v);
       }},
      {"retrieval.min_similarity", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.retrieval.min_similarity = parse_number<double>(k, v);
       }},

      {"dialogue.narratives", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.dialogue.narratives = parse_number<std::size_t>(k, v);
       }},
      {"dialogue.task", [](PipelineConfig& c, const std::string&, const std::string& v) { c.dialogue.task = unquote(v); }},
      {"dialogue.mode", [](PipelineConfig& c, const std::string&, const std::string& v) { c.dialogue.mode = unquote(v); }},
      {"dialogue.turn_cap", [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.dialogue.turn_cap = parse_number<std::size_t>(k, v);
       }},
  };
  return table;
}

}  // namespace

void validate(const PipelineConfig& c) {
  if (c.concurrency == 0) throw ConfigError("run.concurrency", "must be at least 1");
  if (c.llm.model.empty()) throw ConfigError("llm.model", "must not be empty");
  if (c.llm.tokens_per_minute == 0) throw ConfigError("llm.tokens_per_minute", "must be positive");
  if (c.llm.requests_per_minute == 0) throw ConfigError("llm.requests_per_minute", "must be positive");
  if (c.llm.price_input_per_million < 0) throw ConfigError("llm.price_input_per_million", "must be >= 0");
  if (c.llm.price_output_per_million < 0) throw ConfigError("llm.price_output_per_million", "must be >= 0");
  if (c.llm.max_attempts < 1) throw ConfigError("llm.max_attempts", "must be at least 1");
  if (c.llm.timeout_seconds < 1) throw ConfigError("llm.timeout_seconds", "must be at least 1");
  if (c.embedding.dimension == 0) throw ConfigError("embedding.dimension", "must be positive");
  if (c.embedding.provider == EmbedderKind::kRemote && c.embedding.model.empty()) {
    throw ConfigError("embedding.model", "required for the remote provider");
  }
  if (c.generation.samples_per_prompt == 0) throw ConfigError("generation.samples_per_prompt", "must be positive");
  if (!(c.generation.temperature >= 0.0 && c.generation.temperature <= 2.0)) {
    throw ConfigError("generation.temperature", "must lie in [0, 2]");
  }
  if (c.generation.examples_per_prompt == 0) throw ConfigError("generation.examples_per_prompt", "must be positive");
  if (c.generation.iterations == 0) throw ConfigError("generation.iterations", "must be positive");
  if (!(c.consolidate.hac.distance_threshold > 0.0)) throw ConfigError("consolidate.threshold", "must be > 0");
  try {
    consolidate::validate_render_template(c.consolidate.render_template);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("consolidate.render_template", e.what());
  }
  if (c.retrieval.k == 0) throw ConfigError("retrieval.k", "must be positive");
  if (!(c.retrieval.min_similarity >= 0.0 && c.retrieval.min_similarity <= 1.0)) {
    throw ConfigError("retrieval.min_similarity", "must lie in [0, 1]");
  }
  if (c.dialogue.task != "utterance" && c.dialogue.task != "full") {
    throw ConfigError("dialogue.task", "expected utterance or full");
  }
  if (c.dialogue.mode != "vanilla" && c.dialogue.mode != "ccsk" && c.dialogue.mode != "both") {
    throw ConfigError("dialogue.mode", "expected vanilla, ccsk or both");
  }
  if (c.dialogue.turn_cap == 0) throw ConfigError("dialogue.turn_cap", "must be positive");
}

PipelineConfig parse_config(const std::string& ini_text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    // Boost's reader only knows ';' comments.
    std::string normalized;
    std::istringstream lines(ini_text);
    for (std::string line; std::getline(lines, line);) {
      const auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] == '#') line[first] = ';';
      normalized += line + "\n";
    }
    std::istringstream in(normalized);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", "malformed config at line " + std::to_string(e.line()) + ": " + e.message());
  }
  PipelineConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside any section");
    for (const auto& [key, value] : body) {
      const std::string path = section + "." + key;
      auto it = setters().find(path);
      if (it == setters().end()) throw ConfigError(path, "unknown key");
      it->second(config, path, value.data());
    }
  }
  config.base_dir = base_dir;
  if (config.work_dir.is_relative()) config.work_dir = base_dir / config.work_dir;
  config.work_dir = config.work_dir.lexically_normal();
  validate(config);
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("", "config file not found: " + path.string());
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(io::read_file(path), base);
}

std::filesystem::path resolve(const PipelineConfig& config, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return (config.base_dir / p).lexically_normal();
}

}  // namespace mango::config

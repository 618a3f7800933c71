#include "mango/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "json_util.hpp"
#include "mango/errors.hpp"
#include "mango/filtering.hpp"
#include "mango/io.hpp"
#include "mango/parallel.hpp"
#include "mango/prompts.hpp"
#include "mango/text.hpp"

namespace mango::dialogue {

using detail::json;

void validate(const Narrative& n) {
  const std::string body = text::trim(n.text);
  if (body.empty()) throw ValidationError("narrative " + n.id + " is empty");
  if (filtering::split_sentences(body).size() > kMaxNarrativeSentences) {
    throw ValidationError("narrative " + n.id + " has more than 5 sentences");
  }
  for (const auto& p : n.participants) {
    if (text::trim(p.name).empty() || text::trim(p.culture).empty()) {
      throw ValidationError("narrative " + n.id + " has an incomplete participant");
    }
    if (!text::contains_whole_word(body, text::trim(p.name))) {
      throw ValidationError("narrative " + n.id + " does not mention " + p.name);
    }
  }
  if (text::canonical_text(n.participants[0].name) == text::canonical_text(n.participants[1].name)) {
    throw ValidationError("narrative " + n.id + " names the same participant twice");
  }
  if (text::canonical_text(n.participants[0].culture) == text::canonical_text(n.participants[1].culture)) {
    throw ValidationError("narrative " + n.id + " participants share a culture");
  }
}

std::string to_json_line(const Narrative& n) {
  json j;
  j["id"] = n.id;
  j["text"] = n.text;
  json ps = json::array();
  for (const auto& p : n.participants) ps.push_back(json{{"name", p.name}, {"culture", p.culture}});
  j["participants"] = std::move(ps);
  return detail::dump_line(j);
}

Narrative narrative_from_json_line(std::string_view line, std::size_t line_no) {
  const json j = detail::parse_line(line, line_no);
  detail::require_fields(j, {"id", "text", "participants"}, line_no);
  Narrative n;
  n.id = detail::get_string(j, "id", line_no);
  n.text = detail::get_string(j, "text", line_no);
  const auto& ps = j.at("participants");
  if (!ps.is_array() || ps.size() != 2) throw ParseError("participants must hold exactly two entries", line_no);
  for (std::size_t i = 0; i < 2; ++i) {
    if (!ps[i].is_object()) throw ParseError("participant must be an object", line_no);
    detail::require_fields(ps[i], {"name", "culture"}, line_no);
    n.participants[i] = {detail::get_string(ps[i], "name", line_no), detail::get_string(ps[i], "culture", line_no)};
  }
  try {
    validate(n);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return n;
}

std::vector<Narrative> read_narratives(const std::filesystem::path& path) {
  std::vector<Narrative> out;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (!text::trim(line).empty()) out.push_back(narrative_from_json_line(line, line_no));
  }
  return out;
}

void write_narratives(const std::filesystem::path& path, std::span<const Narrative> narratives) {
  std::string content;
  for (const auto& n : narratives) content += to_json_line(n) + "\n";
  io::write_file_atomic(path, content);
}

std::string_view to_string(Mode mode) { return mode == Mode::kVanilla ? "vanilla" : "ccsk"; }

Mode mode_from_string(std::string_view s) {
  if (s == "vanilla") return Mode::kVanilla;
  if (s == "ccsk") return Mode::kCcsk;
  throw std::invalid_argument("unknown dialogue mode \"" + std::string(s) + "\"");
}

std::string to_json_line(const Dialogue& d) {
  json j;
  j["narrative_id"] = d.narrative_id;
  j["mode"] = std::string(to_string(d.mode));
  json turns = json::array();
  for (const auto& t : d.turns) turns.push_back(json{{"speaker", t.speaker}, {"utterance", t.utterance}});
  j["turns"] = std::move(turns);
  j["injected_ccsk"] = d.injected_ccsk;
  return detail::dump_line(j);
}

Dialogue dialogue_from_json_line(std::string_view line, std::size_t line_no) {
  const json j = detail::parse_line(line, line_no);
  detail::require_fields(j, {"narrative_id", "mode", "turns", "injected_ccsk"}, line_no);
  Dialogue d;
  d.narrative_id = detail::get_string(j, "narrative_id", line_no);
  d.mode = mode_from_string(detail::get_string(j, "mode", line_no));
  if (!j.at("turns").is_array()) throw ParseError("turns must be an array", line_no);
  for (const auto& t : j.at("turns")) {
    if (!t.is_object()) throw ParseError("turn must be an object", line_no);
    detail::require_fields(t, {"speaker", "utterance"}, line_no);
    d.turns.push_back({detail::get_string(t, "speaker", line_no), detail::get_string(t, "utterance", line_no)});
  }
  d.injected_ccsk = detail::get_string_array(j, "injected_ccsk", line_no);
  return d;
}

// ---------------------------------------------------------------------------------------------

namespace {

// Length of a list marker at the start of `line`, or 0.
std::size_t list_marker(std::string_view line) {
  if (line.starts_with("- ") || line.starts_with("* ")) return 2;
  if (line.starts_with("\xE2\x80\xA2 ")) return 4;
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') return i + 2;
  return 0;
}

std::vector<std::string> split_lines(std::string_view raw) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto eol = raw.find('\n', pos);
    if (eol == std::string_view::npos) eol = raw.size();
    out.push_back(text::trim(raw.substr(pos, eol - pos)));
    pos = eol + 1;
  }
  return out;
}

std::string strip_emphasis(std::string s) {
  s = text::trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '_')) s.erase(s.begin());
  while (!s.empty() && (s.back() == '*' || s.back() == '_')) s.pop_back();
  return text::trim(s);
}

std::string strip_quotes(std::string s) {
  s = text::trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = text::trim(s.substr(1, s.size() - 2));
  return s;
}

}  // namespace

std::vector<std::string> parse_narrative_lines(std::string_view raw) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(raw)) {
    const std::size_t m = list_marker(line);
    if (m == 0) continue;
    std::string body = text::trim(std::string_view(line).substr(m));
    if (!body.empty()) out.push_back(std::move(body));
  }
  return out;
}

llm::CompletionRequest build_narrative_prompt(std::uint32_t batch) {
  llm::CompletionRequest req;
  req.user_text = std::string(prompts::kNarrativePrompt);
  req.temperature = 1.0;
  req.sample_index = batch;
  return req;
}

llm::CompletionRequest build_participant_prompt(std::string_view narrative_text) {
  llm::CompletionRequest req;
  req.system_text = std::string(prompts::kParticipantSystem);
  req.user_text = std::string(prompts::kParticipantInstruction) + "\n\nNarrative: " + text::trim(narrative_text);
  req.temperature = 0.0;
  req.structured_output = true;
  return req;
}

std::optional<std::array<Participant, 2>> parse_participants(std::string_view raw) {
  const json root = detail::extract_json(raw);
  if (root.is_discarded()) return std::nullopt;
  const json* list = &root;
  if (root.is_object()) {
    if (!root.contains("participants")) return std::nullopt;
    list = &root.at("participants");
  }
  if (!list->is_array() || list->size() != 2) return std::nullopt;
  std::array<Participant, 2> out;
  for (std::size_t i = 0; i < 2; ++i) {
    const json& p = (*list)[i];
    if (!p.is_object() || !p.contains("name") || !p.contains("culture")) return std::nullopt;
    if (!p.at("name").is_string() || !p.at("culture").is_string()) return std::nullopt;
    out[i] = {text::trim(p.at("name").get<std::string>()), text::trim(p.at("culture").get<std::string>())};
  }
  return out;
}

NarrativeBatch generate_narratives(std::size_t n, llm::Gateway& gateway, std::size_t concurrency) {
  NarrativeBatch out;
  if (n == 0) return out;
  const std::size_t batches = (n + 2) / 3;
  std::vector<std::vector<std::string>> bodies(batches);
  std::vector<std::string> errors(batches);
  parallel_for(batches, concurrency, [&](std::size_t b) {
    try {
      bodies[b] = parse_narrative_lines(gateway.complete(build_narrative_prompt(static_cast<std::uint32_t>(b))));
    } catch (const std::exception& e) {
      errors[b] = e.what();
    }
  });
  out.gateway_calls += batches;

  std::vector<std::string> texts;
  for (std::size_t b = 0; b < batches; ++b) {
    if (!errors[b].empty()) out.warnings.push_back("narrative batch " + std::to_string(b) + ": " + errors[b]);
    for (auto& t : bodies[b]) {
      if (texts.size() < n) texts.push_back(std::move(t));
    }
  }

  std::vector<std::optional<Narrative>> parsed(texts.size());
  std::vector<std::string> problems(texts.size());
  parallel_for(texts.size(), concurrency, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof(id), "narr-%04zu", i + 1);
    try {
      auto participants = parse_participants(gateway.complete(build_participant_prompt(texts[i])));
      if (!participants) {
        problems[i] = std::string(id) + ": participants could not be extracted";
        return;
      }
      Narrative narrative{id, texts[i], *participants};
      validate(narrative);
      parsed[i] = std::move(narrative);
    } catch (const std::exception& e) {
      problems[i] = std::string(id) + ": " + e.what();
    }
  });
  out.gateway_calls += texts.size();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (parsed[i]) out.narratives.push_back(std::move(*parsed[i]));
    else out.warnings.push_back(problems[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

std::optional<std::vector<Turn>> parse_turns(std::string_view raw, const Narrative& narrative) {
  std::vector<Turn> turns;
  for (const auto& line : split_lines(raw)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos || colon == 0) continue;
    const std::string label = strip_emphasis(line.substr(0, colon));
    const std::string utterance = strip_quotes(strip_emphasis(line.substr(colon + 1)));
    const Participant* who = nullptr;
    for (const auto& p : narrative.participants) {
      if (text::canonical_text(p.name) == text::canonical_text(label)) who = &p;
    }
    if (who == nullptr) {
      // Long lines with a colon are prose, not a speaker label.
      if (text::split_words(label).size() > 3) continue;
      return std::nullopt;
    }
    if (utterance.empty()) continue;
    if (!turns.empty() && turns.back().speaker == who->name) {
      turns.back().utterance += " " + utterance;
    } else {
      turns.push_back({who->name, utterance});
    }
  }
  return turns;
}

llm::CompletionRequest build_seed_dialogue_prompt(const Narrative& narrative) {
  llm::CompletionRequest req;
  req.user_text = std::string(prompts::kSeedDialogueInstruction) + "\n\nSituation: " + text::trim(narrative.text);
  req.temperature = 1.0;
  return req;
}

std::optional<Dialogue> seed_dialogue(const Narrative& narrative, llm::Gateway& gateway) {
  auto turns = parse_turns(gateway.complete(build_seed_dialogue_prompt(narrative)), narrative);
  if (!turns || turns->size() < kSeedTurns) return std::nullopt;
  turns->resize(kSeedTurns);
  return Dialogue{narrative.id, std::move(*turns), Mode::kVanilla, {}};
}

std::string next_speaker(const Narrative& narrative, std::span<const Turn> history) {
  if (history.empty()) return narrative.participants[0].name;
  return history.back().speaker == narrative.participants[0].name ? narrative.participants[1].name
                                                                   : narrative.participants[0].name;
}

std::string format_knowledge_block(std::span<const retrieval::RetrievalHit> knowledge) {
  if (knowledge.empty()) return {};
  std::string block = std::string(prompts::kKnowledgeHeader) + "\n";
  for (const auto& k : knowledge) block += "- " + k.statement + "\n";
  return block + "\n";
}

llm::CompletionRequest build_next_utterance_prompt(const Narrative& narrative, std::span<const Turn> history,
                                                   std::span<const retrieval::RetrievalHit> knowledge) {
  if (history.empty()) throw std::invalid_argument("next utterance needs a non-empty history");
  llm::CompletionRequest req;
  req.system_text = std::string(prompts::kNextUtteranceTask);
  req.user_text = "Narrative: " + text::trim(narrative.text) + "\n\n";
  req.user_text += format_knowledge_block(knowledge);
  req.user_text += "Dialogue:\n";
  for (const auto& t : history) req.user_text += t.speaker + ": " + t.utterance + "\n";
  req.user_text += "\nNext speaker: " + next_speaker(narrative, history);
  req.temperature = 1.0;
  return req;
}

llm::CompletionRequest build_full_dialogue_prompt(const Narrative& narrative,
                                                  std::span<const retrieval::RetrievalHit> knowledge,
                                                  std::size_t turn_cap) {
  llm::CompletionRequest req;
  req.system_text = std::string(prompts::kFullDialogueTask) + " Use at most " + std::to_string(turn_cap) + " turns.";
  req.user_text = "Narrative: " + text::trim(narrative.text) + "\n\n";
  req.user_text += format_knowledge_block(knowledge);
  req.user_text += "Participants: " + narrative.participants[0].name + ", " + narrative.participants[1].name;
  req.temperature = 1.0;
  return req;
}

namespace {

std::vector<std::string> cluster_ids(std::span<const retrieval::RetrievalHit> knowledge) {
  std::vector<std::string> ids;
  for (const auto& k : knowledge) ids.push_back(k.cluster_id);
  return ids;
}

}  // namespace

UtteranceResult next_utterance(const Narrative& narrative, std::span<const Turn> history, Mode mode,
                               std::span<const retrieval::RetrievalHit> knowledge, llm::Gateway& gateway) {
  UtteranceResult out;
  out.narrative_id = narrative.id;
  out.mode = mode;
  out.turn.speaker = next_speaker(narrative, history);
  if (mode == Mode::kCcsk && knowledge.empty()) {
    out.no_ccsk = true;
    return out;
  }
  const auto used = mode == Mode::kCcsk ? knowledge : std::span<const retrieval::RetrievalHit>{};
  const std::string raw = gateway.complete(build_next_utterance_prompt(narrative, history, used));
  std::string reply;
  for (const auto& line : split_lines(raw)) {
    if (!line.empty()) {
      reply = line;
      break;
    }
  }
  // Drop a leading "Name:" label if the model added one.
  const std::string label = out.turn.speaker + ":";
  std::string stripped = strip_emphasis(reply);
  if (stripped.starts_with(label)) reply = stripped.substr(label.size());
  out.turn.utterance = strip_quotes(reply);
  out.injected_ccsk = cluster_ids(used);
  return out;
}

FullDialogueResult full_dialogue(const Narrative& narrative, Mode mode,
                                 std::span<const retrieval::RetrievalHit> knowledge, llm::Gateway& gateway,
                                 std::size_t turn_cap) {
  if (turn_cap == 0) throw std::invalid_argument("turn_cap must be positive");
  FullDialogueResult out;
  if (mode == Mode::kCcsk && knowledge.empty()) {
    out.no_ccsk = true;
    return out;
  }
  const auto used = mode == Mode::kCcsk ? knowledge : std::span<const retrieval::RetrievalHit>{};
  auto turns = parse_turns(gateway.complete(build_full_dialogue_prompt(narrative, used, turn_cap)), narrative);
  if (!turns || turns->empty()) {
    out.warning = narrative.id + ": dialogue reply has no usable turns";
    return out;
  }
  if (turns->size() > turn_cap) turns->resize(turn_cap);
  out.dialogue = Dialogue{narrative.id, std::move(*turns), mode, cluster_ids(used)};
  return out;
}

// ---------------------------------------------------------------------------------------------

EvalBundle export_eval_bundle(std::span<const EvalPair> pairs, std::mt19937_64& rng) {
  EvalBundle bundle;
  std::set<std::string> seen;
  std::bernoulli_distribution vanilla_first(0.5);
  for (const auto& p : pairs) {
    if (p.item_id.empty() || p.vanilla_output.empty() || p.ccsk_output.empty()) {
      throw std::invalid_argument("eval pair " + p.item_id + " is missing an output");
    }
    if (!seen.insert(p.item_id).second) throw std::invalid_argument("duplicate eval item " + p.item_id);
    const bool vf = vanilla_first(rng);
    bundle.items.push_back({p.item_id, p.context, vf ? p.vanilla_output : p.ccsk_output,
                            vf ? p.ccsk_output : p.vanilla_output});
    bundle.key.push_back({p.item_id, vf ? Mode::kVanilla : Mode::kCcsk, vf ? Mode::kCcsk : Mode::kVanilla});
  }
  return bundle;
}

void write_eval_bundle(const EvalBundle& bundle, const std::filesystem::path& bundle_path,
                       const std::filesystem::path& key_path) {
  json dims = json::array();
  for (auto d : kEvalDimensions) dims.push_back(std::string(d));
  json options = json::array();
  for (auto o : kEvalOptions) options.push_back(std::string(o));
  std::string items;
  for (const auto& it : bundle.items) {
    json j;
    j["item_id"] = it.item_id;
    j["context"] = it.context;
    j["output_a"] = it.output_a;
    j["output_b"] = it.output_b;
    j["dimensions"] = dims;
    j["options"] = options;
    items += detail::dump_line(j) + "\n";
  }
  std::string key;
  for (const auto& k : bundle.key) {
    json j;
    j["item_id"] = k.item_id;
    j["A"] = std::string(to_string(k.a));
    j["B"] = std::string(to_string(k.b));
    key += detail::dump_line(j) + "\n";
  }
  io::write_file_atomic(bundle_path, items);
  io::write_file_atomic(key_path, key);
}

std::vector<EvalItem> read_eval_items(const std::filesystem::path& bundle_path) {
  std::vector<EvalItem> out;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(bundle_path)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const json j = detail::parse_line(line, line_no);
    detail::require_fields(j, {"item_id", "context", "output_a", "output_b", "dimensions", "options"}, line_no);
    out.push_back({detail::get_string(j, "item_id", line_no), detail::get_string(j, "context", line_no),
                   detail::get_string(j, "output_a", line_no), detail::get_string(j, "output_b", line_no)});
  }
  return out;
}

std::vector<AnswerKey> read_answer_key(const std::filesystem::path& key_path) {
  std::vector<AnswerKey> out;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(key_path)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const json j = detail::parse_line(line, line_no);
    detail::require_fields(j, {"item_id", "A", "B"}, line_no);
    out.push_back({detail::get_string(j, "item_id", line_no), mode_from_string(detail::get_string(j, "A", line_no)),
                   mode_from_string(detail::get_string(j, "B", line_no))});
  }
  return out;
}

std::map<std::string, PreferenceCounts> tally_preferences(std::span<const Judgment> judgments,
                                                          std::span<const AnswerKey> key) {
  std::map<std::string, const AnswerKey*> by_id;
  for (const auto& k : key) by_id[k.item_id] = &k;
  std::map<std::string, PreferenceCounts> out;
  for (auto d : kEvalDimensions) out[std::string(d)];
  for (const auto& j : judgments) {
    auto it = by_id.find(j.item_id);
    if (it == by_id.end()) throw std::invalid_argument("judgment for unknown item " + j.item_id);
    auto dim = out.find(j.dimension);
    if (dim == out.end()) throw std::invalid_argument("unknown dimension " + j.dimension);
    PreferenceCounts& c = dim->second;
    if (j.choice == "Tie") {
      ++c.tie;
    } else if (j.choice == "A" || j.choice == "B") {
      const Mode m = j.choice == "A" ? it->second->a : it->second->b;
      ++(m == Mode::kVanilla ? c.vanilla : c.ccsk);
    } else {
      throw std::invalid_argument("unknown choice " + j.choice);
    }
  }
  return out;
}

}  // namespace mango::dialogue

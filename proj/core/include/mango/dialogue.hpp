#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mango/gateway.hpp"
#include "mango/narrative.hpp"
#include "mango/retrieval.hpp"

namespace mango::dialogue {

enum class Mode { kVanilla, kCcsk };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view s);

struct Turn {
  std::string speaker;
  std::string utterance;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string narrative_id;
  std::vector<Turn> turns;
  Mode mode = Mode::kVanilla;
  std::vector<std::string> injected_ccsk;  // cluster ids; empty for vanilla

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

std::string to_json_line(const Dialogue& dialogue);
Dialogue dialogue_from_json_line(std::string_view line, std::size_t line_no = 0);

inline constexpr std::size_t kSeedTurns = 3;
inline constexpr std::size_t kDefaultTurnCap = 12;

// --- narratives --------------------------------------------------------------------------------

// Narrative bodies from "- ..." (also "* ", "• " or "1. ") lines of a generator reply.
std::vector<std::string> parse_narrative_lines(std::string_view raw);

llm::CompletionRequest build_narrative_prompt(std::uint32_t batch);
llm::CompletionRequest build_participant_prompt(std::string_view narrative_text);

// Both participants, or nullopt when the reply does not name exactly two.
std::optional<std::array<Participant, 2>> parse_participants(std::string_view raw);

struct NarrativeBatch {
  std::vector<Narrative> narratives;
  std::size_t gateway_calls = 0;
  std::vector<std::string> warnings;  // discarded items and parse failures
};

// ceil(n / 3) generator calls, then one extraction call per narrative. Invalid narratives are
// dropped with a warning. Ids are "narr-NNNN" in generation order.
NarrativeBatch generate_narratives(std::size_t n, llm::Gateway& gateway, std::size_t concurrency = 1);

// --- dialogues ---------------------------------------------------------------------------------

// "Name: utterance" lines; markdown emphasis around the name is ignored. Lines without a colon
// are skipped. Returns nullopt if a labelled line names someone other than the participants.
// Consecutive lines by the same speaker are joined so speakers alternate.
std::optional<std::vector<Turn>> parse_turns(std::string_view raw, const Narrative& narrative);

llm::CompletionRequest build_seed_dialogue_prompt(const Narrative& narrative);

// The first three turns of a model-written dialogue, or nullopt when fewer parse.
std::optional<Dialogue> seed_dialogue(const Narrative& narrative, llm::Gateway& gateway);

// The participant who did not speak last.
std::string next_speaker(const Narrative& narrative, std::span<const Turn> history);

std::string format_knowledge_block(std::span<const retrieval::RetrievalHit> knowledge);

// With empty `knowledge` this is the vanilla prompt; otherwise the knowledge block is inserted
// before the dialogue history and nothing else changes.
llm::CompletionRequest build_next_utterance_prompt(const Narrative& narrative, std::span<const Turn> history,
                                                   std::span<const retrieval::RetrievalHit> knowledge);
llm::CompletionRequest build_full_dialogue_prompt(const Narrative& narrative,
                                                  std::span<const retrieval::RetrievalHit> knowledge,
                                                  std::size_t turn_cap);

struct UtteranceResult {
  std::string narrative_id;
  Mode mode = Mode::kVanilla;
  Turn turn;
  std::vector<std::string> injected_ccsk;
  bool no_ccsk = false;  // augmented mode found nothing to inject; no call was made
};

// Augmented mode requires non-empty knowledge; with none the result is marked no_ccsk.
UtteranceResult next_utterance(const Narrative& narrative, std::span<const Turn> history, Mode mode,
                               std::span<const retrieval::RetrievalHit> knowledge, llm::Gateway& gateway);

struct FullDialogueResult {
  std::optional<Dialogue> dialogue;  // nullopt when skipped
  bool no_ccsk = false;
  std::string warning;
};

FullDialogueResult full_dialogue(const Narrative& narrative, Mode mode,
                                 std::span<const retrieval::RetrievalHit> knowledge, llm::Gateway& gateway,
                                 std::size_t turn_cap = kDefaultTurnCap);

// --- evaluation bundle -------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 5> kEvalDimensions = {
    "Naturalness", "Consistency", "Specificity", "Cultural Sensitivity", "Overall Quality"};
inline constexpr std::array<std::string_view, 3> kEvalOptions = {"A", "B", "Tie"};

struct EvalPair {
  std::string item_id;
  std::string context;
  std::string vanilla_output;
  std::string ccsk_output;
};

struct EvalItem {
  std::string item_id;
  std::string context;
  std::string output_a;
  std::string output_b;
};

struct AnswerKey {
  std::string item_id;
  Mode a = Mode::kVanilla;
  Mode b = Mode::kCcsk;
};

struct EvalBundle {
  std::vector<EvalItem> items;
  std::vector<AnswerKey> key;
};

// Each item independently shows vanilla first with probability 1/2. Throws
// std::invalid_argument for a pair with an empty id or output, or a repeated id.
EvalBundle export_eval_bundle(std::span<const EvalPair> pairs, std::mt19937_64& rng);

void write_eval_bundle(const EvalBundle& bundle, const std::filesystem::path& bundle_path,
                       const std::filesystem::path& key_path);
std::vector<EvalItem> read_eval_items(const std::filesystem::path& bundle_path);
std::vector<AnswerKey> read_answer_key(const std::filesystem::path& key_path);

struct Judgment {
  std::string item_id;
  std::string dimension;
  std::string choice;  // "A", "B" or "Tie"
};

struct PreferenceCounts {
  std::size_t vanilla = 0;
  std::size_t ccsk = 0;
  std::size_t tie = 0;

  friend bool operator==(const PreferenceCounts&, const PreferenceCounts&) = default;
};

// Joins judgments with the key. Throws std::invalid_argument for an unknown item, dimension or
// choice.
std::map<std::string, PreferenceCounts> tally_preferences(std::span<const Judgment> judgments,
                                                          std::span<const AnswerKey> key);

}  // namespace mango::dialogue

#pragma once

#include <span>
#include <string_view>

// Every prompt text the pipeline sends lives here so wording changes are reviewable in one
// place. Templates marked kPublished reproduce the published method's wording verbatim;
// kAuthored wording was written for this repository.
namespace mango::prompts {

enum class Origin { kPublished, kAuthored };

struct TemplateInfo {
  std::string_view name;
  std::string_view version;
  Origin origin;
};

std::span<const TemplateInfo> catalog();

// --- assertion generation ------------------------------------------------------------------
inline constexpr std::string_view kAssertionPreamble =
    "You are a helpful assistant that writes culture-specific commonsense assertions.";
inline constexpr std::string_view kExamplesHeader = "Some examples assertions are listed below:";
inline constexpr std::string_view kConceptClosing = "Please write assertions for the concept: ";
inline constexpr std::string_view kCultureClosing =
    "Please write assertions where one of the cultures is: ";
// Authored: the provider's JSON mode requires the word JSON in the conversation.
inline constexpr std::string_view kAssertionFormat =
    "Respond with a JSON object of the form {\"assertions\": [{\"concept\": \"...\", "
    "\"culture\": \"...\", \"statement\": \"...\"}]}, one entry per culture-specific view.";

// --- seed cleaning (authored) ----------------------------------------------------------------
inline constexpr std::string_view kSeedJudgeSystem =
    "You are a careful annotator who decides whether words and phrases are comprehensible "
    "everyday concepts.";
inline constexpr std::string_view kSeedJudgeInstruction =
    "For each of the following words or phrases, decide whether to keep it: keep it if it is a "
    "comprehensible everyday concept, drop it otherwise. Respond with a JSON object of the form "
    "{\"judgments\": [{\"concept\": \"...\", \"keep\": true}]}.";

// --- representative generation ------------------------------------------------------------------
inline constexpr std::string_view kRepresentativeSystem =
    "You are a helpful assistant that summarizes culture-specific commonsense assertions.";
inline constexpr std::string_view kRepresentativeFormat =
    "Respond with a JSON object of the form {\"concept\": \"...\", \"culture\": \"...\", "
    "\"statement\": \"...\"} whose statement is one full sentence.";
inline constexpr std::string_view kRepresentativeInstruction =
    "Please generate a representative sentence for the following assertions:";

// --- narratives ------------------------------------------------------------------------------
inline constexpr std::string_view kNarrativePrompt =
    "You are a narrative generator. Your task is to generate short narratives of less than 5 "
    "sentences around a cultural concept that involves two people from two different cultures. "
    "The narrative should lead to an intercultural interaction where cultural differences play a "
    "significant role. You must not include the cultural differences, or cultural knowledge, or "
    "the resolution, or the consequences of the situation in the narrative.\n"
    "\n"
    "Some examples:\n"
    "- Anna, an American, is visiting a village in Vietnam where Minh is a local. Anna asks Minh "
    "where she can get food for her dog.\n"
    "- Erling from Norway is visiting Seoul. He and his new friend, Heungmin, are picking foods "
    "for their dinner at a traditional restaurant.\n"
    "- Liz and Qiang are two friends, who are currently in England. Qiang is from China who is "
    "visiting the country. Liz is a local. They are preparing tea together.\n"
    "\n"
    "Please write 3 more narratives:";
inline constexpr std::string_view kParticipantSystem =
    "You extract the participants of short stories.";
inline constexpr std::string_view kParticipantInstruction =
    "Extract the two people taking part in the following narrative and the culture each of them "
    "comes from. Copy each name exactly as written in the narrative. Respond with a JSON object "
    "of the form {\"participants\": [{\"name\": \"...\", \"culture\": \"...\"}, {\"name\": "
    "\"...\", \"culture\": \"...\"}]}.";

// --- dialogues (authored) --------------------------------------------------------------------
inline constexpr std::string_view kSeedDialogueInstruction =
    "Generate a possible dialogue between the two participants of the following situation. "
    "Write one turn per line in the form \"Name: utterance\".";
inline constexpr std::string_view kNextUtteranceTask =
    "You are given a narrative about an intercultural interaction between two people and their "
    "ongoing dialogue. Write the next utterance of the dialogue. Reply with the utterance only.";
inline constexpr std::string_view kFullDialogueTask =
    "You are given a narrative about an intercultural interaction between two people. Generate a "
    "full dialogue between the two people. Write one turn per line in the form "
    "\"Name: utterance\".";
inline constexpr std::string_view kKnowledgeHeader = "Relevant cultural knowledge:";

}  // namespace mango::prompts

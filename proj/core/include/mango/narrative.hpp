#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mango::dialogue {

struct Participant {
  std::string name;
  std::string culture;

  friend bool operator==(const Participant&, const Participant&) = default;
};

// A short intercultural scene. Participant 0 becomes "X" and participant 1 "Y" when the
// narrative is anonymized for retrieval.
struct Narrative {
  std::string id;
  std::string text;
  std::array<Participant, 2> participants;

  friend bool operator==(const Narrative&, const Narrative&) = default;
};

inline constexpr std::size_t kMaxNarrativeSentences = 5;

// Throws ValidationError: empty text, more than five sentences, a name missing from the text,
// equal names, or equal cultures.
void validate(const Narrative& narrative);

std::string to_json_line(const Narrative& narrative);
Narrative narrative_from_json_line(std::string_view line, std::size_t line_no = 0);
std::vector<Narrative> read_narratives(const std::filesystem::path& path);
void write_narratives(const std::filesystem::path& path, std::span<const Narrative> narratives);

}  // namespace mango::dialogue

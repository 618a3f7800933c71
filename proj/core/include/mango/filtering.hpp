#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mango/gateway.hpp"
#include "mango/kb.hpp"

namespace mango::filtering {

enum class RejectReason { kTooShort, kTooLong, kMultiSentence, kCultureBlocklist };

inline constexpr std::array kAllReasons = {RejectReason::kTooShort, RejectReason::kTooLong,
                                           RejectReason::kMultiSentence,
                                           RejectReason::kCultureBlocklist};

std::string_view to_string(RejectReason reason);

inline constexpr std::size_t kMinWords = 2;
inline constexpr std::size_t kMaxWords = 25;

class CultureBlocklist {
public:
  // The shipped 21-token default.
  CultureBlocklist();
  explicit CultureBlocklist(std::vector<std::string> tokens);
  static CultureBlocklist from_file(const std::filesystem::path& path);
  static const std::vector<std::string>& default_tokens();

  // First token (in list order) that the culture matches, if any. Tokens made of letters,
  // digits and spaces match whole words of the lower-cased culture; all others match as raw
  // substrings.
  std::optional<std::string> first_match(std::string_view culture) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

private:
  std::vector<std::string> tokens_;
  std::vector<bool> word_token_;
};

std::size_t statement_word_count(std::string_view statement);

// Splits on '.', '!' or '?' followed by whitespace and a letter, unless the word ending at the
// terminator is a known abbreviation.
std::vector<std::string> split_sentences(std::string_view statement);

struct FilterResult {
  bool passed = true;
  RejectReason reason = RejectReason::kTooShort;  // meaningful only when !passed
  std::string detail;                             // matched blocklist token, word count, ...
};

FilterResult passes_filters(const kb::Assertion& assertion, const CultureBlocklist& blocklist);

struct Rejection {
  kb::Assertion assertion;
  RejectReason reason;
  std::string detail;
};

struct FilterReport {
  std::vector<kb::Assertion> kept;
  std::vector<Rejection> rejected;
  std::array<std::size_t, kAllReasons.size()> counts{};

  std::size_t count(RejectReason reason) const { return counts[static_cast<std::size_t>(reason)]; }
};

FilterReport apply_filters(std::span<const kb::Assertion> assertions, const CultureBlocklist& blocklist);

std::string to_json_line(const Rejection& rejection);

struct SeedCleanOptions {
  std::size_t batch_size = 50;
  int batch_attempts = 2;
};

struct SeedCleanResult {
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  // Batches that could not be judged and were passed through unfiltered.
  std::size_t failed_batches = 0;
  std::vector<std::string> warnings;
};

// Asks the model which concepts are comprehensible everyday concepts and drops the rest.
// Input is deduplicated on canonical form first. Concepts missing from a judgment are kept.
SeedCleanResult clean_seed_concepts(std::span<const std::string> concepts, llm::Gateway& gateway,
                                    const SeedCleanOptions& options = {});

llm::CompletionRequest build_seed_judgment_prompt(std::span<const std::string> batch);

}  // namespace mango::filtering

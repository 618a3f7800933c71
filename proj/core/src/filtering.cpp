#include "mango/filtering.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

#include "json_util.hpp"
#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/prompts.hpp"
#include "mango/text.hpp"

namespace mango::filtering {

using detail::json;

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kTooShort: return "too_short";
    case RejectReason::kTooLong: return "too_long";
    case RejectReason::kMultiSentence: return "multi_sentence";
    case RejectReason::kCultureBlocklist: return "culture_blocklist";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------------------------

const std::vector<std::string>& CultureBlocklist::default_tokens() {
  static const std::vector<std::string> tokens = {
      "other", "general", "1", "2", "(", ")", "and", ",", "some", "unknown", "parts of",
      "few", "/", "non-", "many", "outside", "part of", "various", "elsewhere", "rest of", "certain"};
  return tokens;
}

CultureBlocklist::CultureBlocklist() : CultureBlocklist(default_tokens()) {}

CultureBlocklist::CultureBlocklist(std::vector<std::string> tokens) {
  for (auto& t : tokens) {
    std::string token = text::ascii_lower(text::trim(t));
    if (token.empty()) continue;
    const bool word = std::all_of(token.begin(), token.end(), [](unsigned char c) {
      return std::isalnum(c) != 0 || c == ' ';
    });
    tokens_.push_back(std::move(token));
    word_token_.push_back(word);
  }
}

CultureBlocklist CultureBlocklist::from_file(const std::filesystem::path& path) {
  return CultureBlocklist(io::read_list_file(path));
}

std::optional<std::string> CultureBlocklist::first_match(std::string_view culture) const {
  const std::string c = text::canonical_text(culture);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const bool hit = word_token_[i] ? text::contains_whole_word(c, tokens_[i])
                                    : c.find(tokens_[i]) != std::string::npos;
    if (hit) return tokens_[i];
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------------------------

std::size_t statement_word_count(std::string_view statement) {
  return text::split_words(statement).size();
}

namespace {

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> abbr = {
      "u.s.", "u.k.", "e.g.", "i.e.", "etc.", "vs.", "mr.", "mrs.", "ms.", "dr.", "st.", "jr.", "sr.",
      "a.m.", "p.m.", "no.", "approx.", "u.s.a.", "e.u.", "u.n.", "inc.", "ltd.", "co.", "mt.", "ft."};
  return abbr;
}

bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

// ASCII letters and any UTF-8 lead byte count as a letter start.
bool is_letter_start(unsigned char c) { return std::isalpha(c) != 0 || c >= 0xC0; }

bool is_abbreviation(std::string_view s, std::size_t terminator) {
  if (s[terminator] != '.') return false;
  std::size_t b = terminator;
  while (b > 0 && !is_space(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string word = text::ascii_lower(s.substr(b, terminator - b + 1));
  const auto first = word.find_first_not_of("\"'([");
  if (first == std::string::npos) return false;
  return abbreviations().contains(std::string_view(word).substr(first));
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j >= s.size() || !is_space(static_cast<unsigned char>(s[j]))) continue;
    while (j < s.size() && is_space(static_cast<unsigned char>(s[j]))) ++j;
    if (j >= s.size() || !is_letter_start(static_cast<unsigned char>(s[j]))) continue;
    if (is_abbreviation(s, i)) continue;
    out.push_back(text::trim(s.substr(start, i + 1 - start)));
    start = j;
    i = j - 1;
  }
  std::string tail = text::trim(s.substr(start));
  if (!tail.empty() || out.empty()) out.push_back(std::move(tail));
  return out;
}

FilterResult passes_filters(const kb::Assertion& a, const CultureBlocklist& blocklist) {
  const std::size_t words = statement_word_count(a.statement);
  if (words < kMinWords) return {false, RejectReason::kTooShort, std::to_string(words) + " words"};
  if (words > kMaxWords) return {false, RejectReason::kTooLong, std::to_string(words) + " words"};
  if (const auto sentences = split_sentences(a.statement); sentences.size() >= 2) {
    return {false, RejectReason::kMultiSentence, std::to_string(sentences.size()) + " sentences"};
  }
  if (auto token = blocklist.first_match(a.culture)) {
    return {false, RejectReason::kCultureBlocklist, *token};
  }
  return {};
}

FilterReport apply_filters(std::span<const kb::Assertion> assertions, const CultureBlocklist& blocklist) {
  FilterReport report;
  for (const auto& a : assertions) {
    FilterResult r = passes_filters(a, blocklist);
    if (r.passed) {
      report.kept.push_back(a);
    } else {
      ++report.counts[static_cast<std::size_t>(r.reason)];
      report.rejected.push_back({a, r.reason, std::move(r.detail)});
    }
  }
  return report;
}

std::string to_json_line(const Rejection& r) {
  json j = detail::to_json(r.assertion);
  j["reason"] = std::string(to_string(r.reason));
  j["detail"] = r.detail;
  return detail::dump_line(j);
}

// ---------------------------------------------------------------------------------------------

llm::CompletionRequest build_seed_judgment_prompt(std::span<const std::string> batch) {
  llm::CompletionRequest req;
  req.system_text = std::string(prompts::kSeedJudgeSystem);
  req.user_text = std::string(prompts::kSeedJudgeInstruction) + "\n";
  for (const auto& c : batch) req.user_text += "- " + c + "\n";
  req.temperature = 0.0;
  req.structured_output = true;
  return req;
}

namespace {

// canonical concept -> keep
std::unordered_map<std::string, bool> parse_judgments(std::string_view raw) {
  const json root = detail::extract_json(raw);
  if (root.is_discarded()) throw ParseError("seed judgment is not JSON", 0, std::string(raw));
  const json* list = &root;
  if (root.is_object()) {
    if (!root.contains("judgments") || !root.at("judgments").is_array()) {
      throw ParseError("seed judgment lacks a judgments array", 0, std::string(raw));
    }
    list = &root.at("judgments");
  }
  std::unordered_map<std::string, bool> out;
  for (const auto& item : *list) {
    if (!item.is_object() || !item.contains("concept") || !item.contains("keep")) continue;
    if (!item.at("concept").is_string() || !item.at("keep").is_boolean()) continue;
    out[text::canonical_text(item.at("concept").get<std::string>())] = item.at("keep").get<bool>();
  }
  return out;
}

}  // namespace

SeedCleanResult clean_seed_concepts(std::span<const std::string> concepts, llm::Gateway& gateway,
                                    const SeedCleanOptions& options) {
  if (options.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  kb::EntitySet unique;
  for (const auto& c : concepts) {
    if (!text::trim(c).empty()) unique.insert(c);
  }
  const auto& items = unique.items();

  SeedCleanResult result;
  for (std::size_t b = 0; b < items.size(); b += options.batch_size) {
    const std::span<const std::string> batch(items.data() + b, std::min(options.batch_size, items.size() - b));
    std::optional<std::unordered_map<std::string, bool>> judged;
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, options.batch_attempts) && !judged; ++attempt) {
      llm::CompletionRequest req = build_seed_judgment_prompt(batch);
      req.sample_index = static_cast<std::uint32_t>(attempt);
      try {
        judged = parse_judgments(gateway.complete(req));
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    if (!judged) {
      ++result.failed_batches;
      result.warnings.push_back("seed batch starting at " + std::to_string(b) +
                                " passed through unfiltered: " + last_error);
    }
    for (const auto& c : batch) {
      bool keep = true;
      if (judged) {
        if (auto it = judged->find(text::canonical_text(c)); it != judged->end()) keep = it->second;
      }
      (keep ? result.kept : result.dropped).push_back(c);
    }
  }
  return result;
}

}  // namespace mango::filtering

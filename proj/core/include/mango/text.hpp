#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mango::text {

// Separator between fields of a canonical key (U+241F SYMBOL FOR UNIT SEPARATOR).
inline constexpr std::string_view kKeySeparator = "\xE2\x90\x9F";

std::string trim(std::string_view s);

// Trims and collapses every run of ASCII whitespace to one space.
std::string collapse_whitespace(std::string_view s);

// NFC-normalized, lowercased, whitespace-collapsed, trimmed. Unicode-aware.
std::string canonical_text(std::string_view s);

// Canonical form of each field joined by kKeySeparator.
std::string canonical_key(std::span<const std::string> fields);
std::string canonical_key(std::initializer_list<std::string_view> fields);

// Maximal runs of non-whitespace characters.
std::vector<std::string_view> split_words(std::string_view s);

// ASCII-only lowercase; bytes >= 0x80 pass through.
std::string ascii_lower(std::string_view s);

// True for ASCII letters/digits and any byte of a multi-byte UTF-8 sequence.
inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Occurrence of `needle` in `haystack` with no word byte on either side.
bool contains_whole_word(std::string_view haystack, std::string_view needle);

// Replaces every whole-word occurrence; returns the number of replacements.
std::size_t replace_whole_word(std::string& haystack, std::string_view needle,
                               std::string_view replacement);

bool ends_with_terminator(std::string_view s);

// Lowercase hex of SHA-256 over `data`.
std::string sha256_hex(std::string_view data);

}  // namespace mango::text

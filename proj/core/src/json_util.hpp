#pragma once

// Internal helpers around nlohmann::json for strict record decoding.

#include <json.hpp>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "mango/errors.hpp"
#include "mango/kb.hpp"

namespace mango::detail {

using json = nlohmann::ordered_json;

inline std::string dump_line(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

inline json parse_line(std::string_view line, std::size_t line_no) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no, std::string(line));
  }
}

inline void require_fields(const json& obj, std::initializer_list<std::string_view> allowed,
                           std::size_t line_no) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto a : allowed) known = known || it.key() == a;
    if (!known) throw ParseError("unknown field \"" + it.key() + "\"", line_no);
  }
  for (auto a : allowed) {
    if (!obj.contains(std::string(a))) {
      throw ParseError("missing field \"" + std::string(a) + "\"", line_no);
    }
  }
}

inline std::string get_string(const json& obj, const char* key, std::size_t line_no) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ParseError(std::string("field \"") + key + "\" must be a string", line_no);
  return v.get<std::string>();
}

inline std::uint64_t get_uint(const json& obj, const char* key, std::size_t line_no) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ParseError(std::string("field \"") + key + "\" must be a non-negative integer", line_no);
  }
  return v.get<std::uint64_t>();
}

inline std::vector<std::string> get_string_array(const json& obj, const char* key,
                                                 std::size_t line_no) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ParseError(std::string("field \"") + key + "\" must be an array", line_no);
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw ParseError(std::string("field \"") + key + "\" must hold strings", line_no);
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

json to_json(const kb::Assertion& a);
kb::Assertion assertion_from_json(const json& j, std::size_t line_no);

}  // namespace mango::detail

namespace mango::detail {

// Finds a JSON object or array in provider output, tolerating code fences and surrounding
// prose. Returns a discarded value when nothing parses.
inline json extract_json(std::string_view raw) {
  auto try_parse = [](std::string_view s) -> json {
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !(j.is_object() || j.is_array())) return json(json::value_t::discarded);
    return j;
  };
  if (json j = try_parse(raw); !j.is_discarded()) return j;
  for (char open : {'{', '['}) {
    const char close = open == '{' ? '}' : ']';
    const auto b = raw.find(open);
    const auto e = raw.rfind(close);
    if (b != std::string_view::npos && e != std::string_view::npos && e > b) {
      if (json j = try_parse(raw.substr(b, e - b + 1)); !j.is_discarded()) return j;
    }
  }
  return json(json::value_t::discarded);
}

}  // namespace mango::detail

#include "mango/kb.hpp"

#include <algorithm>
#include <map>

#include "json_util.hpp"
#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/text.hpp"

namespace mango {
namespace detail {

json to_json(const kb::Assertion& a) {
  json j;
  j["concept"] = a.concept_name;
  j["culture"] = a.culture;
  j["statement"] = a.statement;
  j["frequency"] = a.frequency;
  j["provenance"] = a.provenance;
  return j;
}

kb::Assertion assertion_from_json(const json& j, std::size_t line_no) {
  if (!j.is_object()) throw ParseError("assertion must be an object", line_no);
  require_fields(j, {"concept", "culture", "statement", "frequency", "provenance"}, line_no);
  kb::Assertion a;
  a.concept_name = get_string(j, "concept", line_no);
  a.culture = get_string(j, "culture", line_no);
  a.statement = get_string(j, "statement", line_no);
  a.frequency = get_uint(j, "frequency", line_no);
  a.provenance = get_string_array(j, "provenance", line_no);
  try {
    kb::validate(a);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return a;
}

}  // namespace detail

namespace kb {

using detail::json;

std::string_view to_string(EntityKind kind) {
  return kind == EntityKind::kConcept ? "concept" : "culture";
}

EntityKind entity_kind_from_string(std::string_view s) {
  if (s == "concept") return EntityKind::kConcept;
  if (s == "culture") return EntityKind::kCulture;
  throw ParseError("unknown entity kind \"" + std::string(s) + "\"");
}

EntitySet::EntitySet(std::initializer_list<std::string> items) {
  for (const auto& i : items) insert(i);
}

bool EntitySet::insert(std::string_view item) {
  auto key = text::canonical_text(item);
  if (key.empty() || index_.contains(key)) return false;
  index_.emplace(std::move(key), items_.size());
  items_.push_back(text::trim(item));
  return true;
}

bool EntitySet::contains(std::string_view item) const {
  return index_.contains(text::canonical_text(item));
}

std::string assertion_key(const Assertion& a) {
  return text::canonical_key({a.concept_name, a.culture, a.statement});
}

void validate(const Assertion& a) {
  if (text::trim(a.concept_name).empty()) throw ValidationError("assertion concept is empty");
  if (text::trim(a.culture).empty()) throw ValidationError("assertion culture is empty");
  if (text::trim(a.statement).empty()) throw ValidationError("assertion statement is empty");
  if (a.frequency < 1) throw ValidationError("assertion frequency must be >= 1");
}

void validate(const AssertionCluster& c) {
  if (c.members.empty()) throw ValidationError("cluster " + c.id + " has no members");
  std::uint64_t sum = 0;
  std::vector<std::string> member_statements;
  for (const auto& m : c.members) {
    validate(m);
    sum += m.frequency;
    member_statements.push_back(m.statement);
  }
  if (sum != c.frequency) {
    throw ValidationError("cluster " + c.id + " frequency " + std::to_string(c.frequency) +
                          " != sum of member frequencies " + std::to_string(sum));
  }
  auto similar = c.similar_statements;
  std::sort(similar.begin(), similar.end());
  std::sort(member_statements.begin(), member_statements.end());
  if (similar != member_statements) {
    throw ValidationError("cluster " + c.id + " similar_statements differ from member statements");
  }
}

void validate(const EntityCluster& c) {
  if (c.members.empty()) throw ValidationError("entity cluster " + c.id + " has no members");
  if (std::find(c.members.begin(), c.members.end(), c.representative) == c.members.end()) {
    throw ValidationError("entity cluster " + c.id + " representative is not a member");
  }
}

std::vector<Assertion> merge_duplicates(std::span<const Assertion> assertions) {
  std::vector<Assertion> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& a : assertions) {
    auto [it, inserted] = slot.try_emplace(assertion_key(a), out.size());
    if (inserted) {
      out.push_back(a);
      continue;
    }
    auto& merged = out[it->second];
    merged.frequency += a.frequency;
    merged.provenance.insert(merged.provenance.end(), a.provenance.begin(), a.provenance.end());
  }
  return out;
}

std::uint64_t total_frequency(std::span<const Assertion> assertions) {
  std::uint64_t sum = 0;
  for (const auto& a : assertions) sum += a.frequency;
  return sum;
}

std::uint64_t total_frequency(std::span<const AssertionCluster> clusters) {
  std::uint64_t sum = 0;
  for (const auto& c : clusters) sum += c.frequency;
  return sum;
}

std::string to_json_line(const Assertion& a) { return detail::dump_line(detail::to_json(a)); }

std::string to_json_line(const AssertionCluster& c) {
  json j;
  j["id"] = c.id;
  j["concept"] = c.concept_name;
  j["culture"] = c.culture;
  j["statement"] = c.statement;
  j["similar_statements"] = c.similar_statements;
  j["frequency"] = c.frequency;
  json members = json::array();
  for (const auto& m : c.members) members.push_back(detail::to_json(m));
  j["members"] = std::move(members);
  return detail::dump_line(j);
}

std::string to_json_line(const EntityCluster& c) {
  json j;
  j["id"] = c.id;
  j["kind"] = std::string(to_string(c.kind));
  j["members"] = c.members;
  j["representative"] = c.representative;
  return detail::dump_line(j);
}

Assertion assertion_from_json_line(std::string_view line, std::size_t line_no) {
  return detail::assertion_from_json(detail::parse_line(line, line_no), line_no);
}

AssertionCluster cluster_from_json_line(std::string_view line, std::size_t line_no) {
  const json j = detail::parse_line(line, line_no);
  detail::require_fields(
      j, {"id", "concept", "culture", "statement", "similar_statements", "frequency", "members"},
      line_no);
  AssertionCluster c;
  c.id = detail::get_string(j, "id", line_no);
  c.concept_name = detail::get_string(j, "concept", line_no);
  c.culture = detail::get_string(j, "culture", line_no);
  c.statement = detail::get_string(j, "statement", line_no);
  c.similar_statements = detail::get_string_array(j, "similar_statements", line_no);
  c.frequency = detail::get_uint(j, "frequency", line_no);
  if (!j.at("members").is_array()) throw ParseError("field \"members\" must be an array", line_no);
  for (const auto& m : j.at("members")) c.members.push_back(detail::assertion_from_json(m, line_no));
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
  }
  return c;
}

EntityCluster entity_cluster_from_json_line(std::string_view line, std::size_t line_no) {
  const json j = detail::parse_line(line, line_no);
  detail::require_fields(j, {"id", "kind", "members", "representative"}, line_no);
  EntityCluster c;
  c.id = detail::get_string(j, "id", line_no);
  c.kind = entity_kind_from_string(detail::get_string(j, "kind", line_no));
  c.members = detail::get_string_array(j, "members", line_no);
  c.representative = detail::get_string(j, "representative", line_no);
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
  }
  return c;
}

namespace {

template <typename T, typename Decode>
std::vector<T> read_jsonl(const std::filesystem::path& path, Decode decode) {
  std::vector<T> out;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    out.push_back(decode(line, line_no));
  }
  return out;
}

template <typename T>
std::string encode_all(std::span<const T> records) {
  std::string content;
  for (const auto& r : records) {
    content += to_json_line(r);
    content += '\n';
  }
  return content;
}

}  // namespace

std::vector<Assertion> read_assertions(const std::filesystem::path& path) {
  return read_jsonl<Assertion>(path, assertion_from_json_line);
}

void write_assertions(const std::filesystem::path& path, std::span<const Assertion> records) {
  for (const auto& r : records) validate(r);
  io::write_file_atomic(path, encode_all(records));
}

void append_assertions(const std::filesystem::path& path, std::span<const Assertion> records) {
  for (const auto& r : records) validate(r);
  io::append_file(path, encode_all(records));
}

std::vector<AssertionCluster> read_clusters(const std::filesystem::path& path) {
  return read_jsonl<AssertionCluster>(path, cluster_from_json_line);
}

void write_clusters(const std::filesystem::path& path, std::span<const AssertionCluster> records) {
  for (const auto& r : records) validate(r);
  io::write_file_atomic(path, encode_all(records));
}

std::vector<EntityCluster> read_entity_clusters(const std::filesystem::path& path) {
  return read_jsonl<EntityCluster>(path, entity_cluster_from_json_line);
}

void write_entity_clusters(const std::filesystem::path& path,
                           std::span<const EntityCluster> records) {
  for (const auto& r : records) validate(r);
  io::write_file_atomic(path, encode_all(records));
}

}  // namespace kb
}  // namespace mango

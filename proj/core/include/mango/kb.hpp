#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mango::kb {

// One (concept; culture; statement) triple.
struct Assertion {
  std::string concept_name;
  std::string culture;
  std::string statement;
  std::uint64_t frequency = 1;            // exact-duplicate generations
  std::vector<std::string> provenance;    // generation record ids

  friend bool operator==(const Assertion&, const Assertion&) = default;
};

// Final knowledge-base record: a group of equivalent assertions with a generated representative.
struct AssertionCluster {
  std::string id;
  std::string concept_name;
  std::string culture;
  std::string statement;
  std::vector<std::string> similar_statements;
  std::vector<Assertion> members;
  std::uint64_t frequency = 0;

  friend bool operator==(const AssertionCluster&, const AssertionCluster&) = default;
};

enum class EntityKind { kConcept, kCulture };

std::string_view to_string(EntityKind kind);
EntityKind entity_kind_from_string(std::string_view s);

struct EntityCluster {
  std::string id;
  EntityKind kind = EntityKind::kConcept;
  std::vector<std::string> members;
  std::string representative;

  friend bool operator==(const EntityCluster&, const EntityCluster&) = default;
};

// Insertion-ordered set of surface strings, deduplicated on canonical key.
class EntitySet {
public:
  EntitySet() = default;
  EntitySet(std::initializer_list<std::string> items);

  // Returns false (and keeps the first spelling) if the key is already present.
  bool insert(std::string_view item);
  bool contains(std::string_view item) const;
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<std::string>& items() const noexcept { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SeedSet {
  EntitySet concepts;
  EntitySet cultures;
  std::uint32_t iteration = 0;
};

// Canonical duplicate key of an assertion's three text fields.
std::string assertion_key(const Assertion& a);

// Throws ValidationError when an invariant does not hold.
void validate(const Assertion& a);
void validate(const AssertionCluster& c);
void validate(const EntityCluster& c);

// One record per canonical key, first-appearance order; frequencies summed, provenance concatenated.
std::vector<Assertion> merge_duplicates(std::span<const Assertion> assertions);

std::uint64_t total_frequency(std::span<const Assertion> assertions);
std::uint64_t total_frequency(std::span<const AssertionCluster> clusters);

// Line-delimited JSON persistence. Readers reject unknown fields and invariant violations,
// naming the 1-based line number. Writers replace the file atomically.
std::vector<Assertion> read_assertions(const std::filesystem::path& path);
void write_assertions(const std::filesystem::path& path, std::span<const Assertion> records);
void append_assertions(const std::filesystem::path& path, std::span<const Assertion> records);

std::vector<AssertionCluster> read_clusters(const std::filesystem::path& path);
void write_clusters(const std::filesystem::path& path, std::span<const AssertionCluster> records);

std::vector<EntityCluster> read_entity_clusters(const std::filesystem::path& path);
void write_entity_clusters(const std::filesystem::path& path, std::span<const EntityCluster> records);

// Single-line codecs, exposed for other record files that embed assertions.
std::string to_json_line(const Assertion& a);
std::string to_json_line(const AssertionCluster& c);
std::string to_json_line(const EntityCluster& c);
Assertion assertion_from_json_line(std::string_view line, std::size_t line_no = 0);
AssertionCluster cluster_from_json_line(std::string_view line, std::size_t line_no = 0);
EntityCluster entity_cluster_from_json_line(std::string_view line, std::size_t line_no = 0);

}  // namespace mango::kb

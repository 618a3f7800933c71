#include "mango/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/text.hpp"

namespace mango::retrieval {

static_assert(std::endian::native == std::endian::little, "index files are written in host order");

void validate(const RetrievalParams& params) {
  if (params.k == 0) throw std::invalid_argument("retrieval k must be positive");
  // Floors outside [-1, 1] are allowed; above 1 nothing can qualify.
  if (!std::isfinite(params.min_similarity)) throw std::invalid_argument("min_similarity must be finite");
}

RetrievalIndex::RetrievalIndex(std::string identity, std::size_t dimension, std::vector<IndexEntry> entries)
    : identity_(std::move(identity)), dimension_(dimension), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.vector.size() != dimension_) throw std::invalid_argument("index entry has the wrong dimension");
  }
}

namespace {

constexpr char kMagic[8] = {'M', 'N', 'G', 'I', 'D', 'X', '0', '1'};

template <typename T>
void put(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

void put_string(std::string& buf, std::string_view s) {
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

class Reader {
public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ParseError("index file is truncated");
  }

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void RetrievalIndex::save(const std::filesystem::path& path) const {
  std::string buf(kMagic, sizeof(kMagic));
  put_string(buf, identity_);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(dimension_));
  put<std::uint64_t>(buf, entries_.size());
  for (const auto& e : entries_) {
    put_string(buf, e.cluster_id);
    put_string(buf, e.statement);
  }
  for (const auto& e : entries_) {
    for (double v : e.vector) put<double>(buf, v);
  }
  io::write_file_atomic(path, buf);
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& path) {
  Reader r(io::read_file(path));
  if (r.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw ParseError("not a retrieval index: " + path.string());
  }
  std::string identity = r.get_string();
  const auto dim = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  std::vector<IndexEntry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.cluster_id = r.get_string();
    e.statement = r.get_string();
    entries.push_back(std::move(e));
  }
  for (auto& e : entries) {
    e.vector.resize(dim);
    for (auto& v : e.vector) v = r.get<double>();
  }
  if (!r.done()) throw ParseError("trailing bytes in index file: " + path.string());
  return RetrievalIndex(std::move(identity), dim, std::move(entries));
}

RetrievalIndex build_index(std::span<const kb::AssertionCluster> clusters, embedding::Embedder& embedder) {
  if (clusters.empty()) throw std::invalid_argument("cannot index an empty knowledge base");
  std::vector<std::string> statements;
  statements.reserve(clusters.size());
  for (const auto& c : clusters) statements.push_back(c.statement);
  auto vectors = embedder.embed_batch(statements);
  std::vector<IndexEntry> entries;
  entries.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    entries.push_back({clusters[i].id, clusters[i].statement, std::move(vectors[i].values)});
  }
  return RetrievalIndex(embedder.identity(), embedder.dimension(), std::move(entries));
}

// ---------------------------------------------------------------------------------------------

namespace {

bool right_boundary(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return true;
  // A typographic apostrophe still ends the name ("Kenji’s").
  if (s.substr(pos, 3) == "\xE2\x80\x99") return true;
  return !text::is_word_byte(static_cast<unsigned char>(s[pos]));
}

std::size_t replace_name(std::string& s, std::string_view name, std::string_view replacement) {
  std::size_t count = 0;
  std::size_t from = 0;
  while ((from = s.find(name, from)) != std::string::npos) {
    const bool left_ok = from == 0 || !text::is_word_byte(static_cast<unsigned char>(s[from - 1]));
    if (left_ok && right_boundary(s, from + name.size())) {
      s.replace(from, name.size(), replacement);
      from += replacement.size();
      ++count;
    } else {
      from += 1;
    }
  }
  return count;
}

}  // namespace

AnonymizedText anonymize_narrative(const dialogue::Narrative& narrative) {
  AnonymizedText out{narrative.text, {}};
  constexpr std::string_view kPlaceholders[2] = {"X", "Y"};
  std::array<std::size_t, 2> order = {0, 1};
  // Longer name first so "Anna" does not eat part of "Anna Maria".
  if (narrative.participants[1].name.size() > narrative.participants[0].name.size()) order = {1, 0};
  for (std::size_t p : order) {
    const std::string name = text::trim(narrative.participants[p].name);
    if (name.empty() || replace_name(out.text, name, kPlaceholders[p]) == 0) {
      out.warnings.push_back("participant name \"" + name + "\" does not occur in narrative " + narrative.id);
    }
  }
  return out;
}

std::vector<RetrievalHit> search(const RetrievalIndex& index, std::span<const double> query,
                                 const RetrievalParams& params) {
  validate(params);
  const auto& entries = index.entries();
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double sim = embedding::cosine(query, entries[i].vector);
    if (sim > params.min_similarity) scored.emplace_back(sim, i);
  }
  auto better = [&](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return entries[a.second].cluster_id < entries[b.second].cluster_id;
  };
  const std::size_t keep = std::min(params.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  std::vector<RetrievalHit> hits;
  hits.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    const auto& e = entries[scored[r].second];
    hits.push_back({e.cluster_id, e.statement, scored[r].first});
  }
  return hits;
}

RetrievalResult retrieve_text(const std::string& query_text, const RetrievalIndex& index,
                              embedding::Embedder& embedder, const RetrievalParams& params) {
  if (embedder.identity() != index.identity()) {
    throw ValidationError("index was built with \"" + index.identity() + "\" but the embedder is \"" +
                          embedder.identity() + "\"");
  }
  RetrievalResult out;
  out.query_text = query_text;
  const auto q = embedder.embed_one(query_text);
  out.hits = search(index, q.values, params);
  return out;
}

RetrievalResult retrieve(const dialogue::Narrative& narrative, const RetrievalIndex& index,
                         embedding::Embedder& embedder, const RetrievalParams& params) {
  AnonymizedText anon = anonymize_narrative(narrative);
  RetrievalResult out = retrieve_text(anon.text, index, embedder, params);
  out.warnings = std::move(anon.warnings);
  return out;
}

}  // namespace mango::retrieval

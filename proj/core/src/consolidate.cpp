#include "mango/consolidate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>
#include <stdexcept>

#include "json_util.hpp"
#include "mango/errors.hpp"
#include "mango/generation.hpp"
#include "mango/parallel.hpp"
#include "mango/prompts.hpp"
#include "mango/text.hpp"

namespace mango::consolidate {

namespace {

std::string numbered(std::string_view prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, n);
  return std::string(prefix) + buf;
}

std::string_view placeholder_value(std::string_view name, const kb::Assertion& a, std::string& scratch) {
  if (name == "concept") scratch = text::trim(a.concept_name);
  else if (name == "culture") scratch = text::trim(a.culture);
  else if (name == "statement") scratch = text::trim(a.statement);
  else throw std::invalid_argument("unknown render placeholder {" + std::string(name) + "}");
  return scratch;
}

}  // namespace

void validate_render_template(std::string_view tmpl) {
  kb::Assertion probe{"c", "k", "s", 1, {}};
  (void)render_for_embedding(probe, tmpl);
}

std::string render_for_embedding(const kb::Assertion& a, std::string_view tmpl) {
  std::string out;
  std::string scratch;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out += tmpl[i];
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw std::invalid_argument("unterminated render placeholder");
    out += placeholder_value(tmpl.substr(i + 1, close - i - 1), a, scratch);
    i = close;
  }
  return out;
}

std::unordered_map<std::string, std::uint64_t> entity_frequencies(std::span<const kb::Assertion> assertions,
                                                                  kb::EntityKind kind) {
  std::unordered_map<std::string, std::uint64_t> out;
  for (const auto& a : assertions) {
    const auto& name = kind == kb::EntityKind::kConcept ? a.concept_name : a.culture;
    out[text::canonical_text(name)] += a.frequency;
  }
  return out;
}

std::vector<kb::EntityCluster> cluster_entities(
    std::span<const std::string> entities, kb::EntityKind kind, embedding::Embedder& embedder,
    const HacParams& params, const std::unordered_map<std::string, std::uint64_t>& frequencies) {
  validate(params);
  if (entities.empty()) return {};
  const auto vectors = embedder.embed_batch(entities);
  const auto labels = hac_ward(vectors, params);

  std::vector<kb::EntityCluster> clusters(cluster_count(labels));
  const std::string prefix = std::string(kb::to_string(kind)) + "-";
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    clusters[c].id = numbered(prefix, c + 1, 4);
    clusters[c].kind = kind;
  }
  for (std::size_t i = 0; i < entities.size(); ++i) clusters[labels[i]].members.push_back(entities[i]);

  auto freq = [&](const std::string& s) -> std::uint64_t {
    auto it = frequencies.find(text::canonical_text(s));
    return it == frequencies.end() ? 0 : it->second;
  };
  for (auto& c : clusters) {
    c.representative = *std::min_element(c.members.begin(), c.members.end(),
                                         [&](const std::string& x, const std::string& y) {
                                           const auto fx = freq(x), fy = freq(y);
                                           if (fx != fy) return fx > fy;
                                           if (x.size() != y.size()) return x.size() < y.size();
                                           return x < y;
                                         });
  }
  return clusters;
}

std::vector<Bucket> partition_assertions(std::span<const kb::Assertion> assertions,
                                         std::span<const kb::EntityCluster> concept_clusters,
                                         std::span<const kb::EntityCluster> culture_clusters) {
  auto index = [](std::span<const kb::EntityCluster> clusters) {
    std::unordered_map<std::string, std::string> out;
    for (const auto& c : clusters) {
      for (const auto& m : c.members) out.emplace(text::canonical_text(m), c.id);
    }
    return out;
  };
  const auto concept_of = index(concept_clusters);
  const auto culture_of = index(culture_clusters);

  std::map<std::pair<std::string, std::string>, Bucket> buckets;
  for (const auto& a : assertions) {
    auto ci = concept_of.find(text::canonical_text(a.concept_name));
    if (ci == concept_of.end()) throw ValidationError("concept not in any cluster: " + a.concept_name);
    auto gi = culture_of.find(text::canonical_text(a.culture));
    if (gi == culture_of.end()) throw ValidationError("culture not in any cluster: " + a.culture);
    Bucket& b = buckets[{ci->second, gi->second}];
    b.concept_cluster_id = ci->second;
    b.culture_cluster_id = gi->second;
    b.assertions.push_back(a);
  }
  std::vector<Bucket> out;
  out.reserve(buckets.size());
  for (auto& [key, b] : buckets) out.push_back(std::move(b));
  return out;
}

namespace {

std::string bucket_id(const Bucket& b) { return b.concept_cluster_id + "/" + b.culture_cluster_id; }

void finish_members(kb::AssertionCluster& c) {
  std::stable_sort(c.members.begin(), c.members.end(),
                   [](const kb::Assertion& x, const kb::Assertion& y) { return x.frequency > y.frequency; });
  c.frequency = 0;
  c.similar_statements.clear();
  for (const auto& m : c.members) {
    c.frequency += m.frequency;
    c.similar_statements.push_back(m.statement);
  }
}

std::vector<kb::AssertionCluster> singleton_clusters(const Bucket& bucket) {
  std::vector<kb::AssertionCluster> out;
  for (std::size_t i = 0; i < bucket.assertions.size(); ++i) {
    kb::AssertionCluster c;
    c.id = numbered(bucket_id(bucket) + "/", i + 1, 3);
    c.members = {bucket.assertions[i]};
    finish_members(c);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<kb::AssertionCluster> cluster_bucket(const Bucket& bucket, embedding::Embedder& embedder,
                                                 const HacParams& params, std::string_view render_template) {
  if (bucket.assertions.empty()) throw std::invalid_argument("cluster_bucket: empty bucket");
  std::vector<std::string> rendered;
  rendered.reserve(bucket.assertions.size());
  for (const auto& a : bucket.assertions) rendered.push_back(render_for_embedding(a, render_template));
  const auto labels = hac_ward(embedder.embed_batch(rendered), params);

  std::vector<kb::AssertionCluster> out(cluster_count(labels));
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].members.push_back(bucket.assertions[i]);
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].id = numbered(bucket_id(bucket) + "/", c + 1, 3);
    finish_members(out[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

std::string with_period(std::string s) {
  s = text::trim(s);
  if (!text::ends_with_terminator(s)) s += '.';
  return s;
}

}  // namespace

std::string format_member_line(const kb::Assertion& m) {
  return "- Concept: " + with_period(m.concept_name) + " Culture: " + with_period(m.culture) +
         " Statement: " + with_period(m.statement) + " (Frequency: " + std::to_string(m.frequency) + ")";
}

llm::CompletionRequest build_representative_prompt(const kb::AssertionCluster& cluster) {
  llm::CompletionRequest req;
  req.system_text = std::string(prompts::kRepresentativeSystem) + "\n" + std::string(prompts::kRepresentativeFormat);
  req.user_text = std::string(prompts::kRepresentativeInstruction) + "\n";
  for (const auto& m : cluster.members) req.user_text += format_member_line(m) + "\n";
  req.temperature = 0.0;
  req.structured_output = true;
  return req;
}

bool parse_representative(std::string_view raw, kb::Assertion& out) {
  const auto j = detail::extract_json(raw);
  if (!j.is_discarded()) {
    try {
      auto parsed = generation::parse_generation_output(raw);
      if (!parsed.assertions.empty()) {
        out = parsed.assertions.front();
        return true;
      }
    } catch (const ParseError&) {
    }
  }
  static const std::regex line_re(
      R"(Concept:\s*(.+?)\.?\s+Culture:\s*(.+?)\.?\s+Statement:\s*(.+?)\s*(\(Frequency:\s*\d+\))?\s*$)",
      std::regex::ECMAScript | std::regex::icase);
  std::size_t pos = 0;
  const std::string s(raw);
  while (pos <= s.size()) {
    auto eol = s.find('\n', pos);
    if (eol == std::string::npos) eol = s.size();
    const std::string line = text::trim(std::string_view(s).substr(pos, eol - pos));
    std::smatch m;
    if (std::regex_search(line, m, line_re)) {
      out = kb::Assertion{text::trim(m[1].str()), text::trim(m[2].str()), text::trim(m[3].str()), 1, {}};
      if (!out.concept_name.empty() && !out.culture.empty() && !out.statement.empty()) return true;
    }
    pos = eol + 1;
  }
  return false;
}

RepresentativeResult generate_representative(const kb::AssertionCluster& cluster, llm::Gateway& gateway) {
  if (cluster.members.empty()) throw std::invalid_argument("generate_representative: cluster has no members");
  RepresentativeResult result;
  result.cluster = cluster;
  kb::AssertionCluster& c = result.cluster;
  finish_members(c);

  auto adopt = [&](const kb::Assertion& a) {
    c.concept_name = a.concept_name;
    c.culture = a.culture;
    c.statement = a.statement;
  };
  if (c.members.size() == 1) {
    adopt(c.members.front());
    return result;
  }

  llm::CompletionRequest req = build_representative_prompt(c);
  std::string last_problem;
  for (std::uint32_t attempt = 0; attempt < 2; ++attempt) {
    req.sample_index = attempt;
    ++result.gateway_calls;
    std::string raw;
    try {
      raw = gateway.complete(req);
    } catch (const CacheMissError&) {
      throw;
    } catch (const std::exception& e) {
      last_problem = e.what();
      continue;
    }
    kb::Assertion rep;
    if (parse_representative(raw, rep)) {
      rep.statement = with_period(rep.statement);
      adopt(rep);
      return result;
    }
    last_problem = "unparseable representative reply";
  }
  adopt(c.members.front());
  result.fallback = true;
  result.warning = "cluster " + c.id + ": " + last_problem + "; using top member";
  return result;
}

// ---------------------------------------------------------------------------------------------

void sort_by_frequency(std::vector<kb::AssertionCluster>& clusters) {
  std::sort(clusters.begin(), clusters.end(), [](const kb::AssertionCluster& a, const kb::AssertionCluster& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.id < b.id;
  });
}

std::vector<kb::AssertionCluster> select_top(std::span<const kb::AssertionCluster> clusters, std::size_t n) {
  std::vector<kb::AssertionCluster> sorted(clusters.begin(), clusters.end());
  sort_by_frequency(sorted);
  if (sorted.size() > n) sorted.resize(n);
  return sorted;
}

ConsolidateOutput consolidate_all(std::span<const kb::Assertion> assertions, embedding::Embedder& embedder,
                                  llm::Gateway& gateway, const ConsolidateOptions& options) {
  validate(options.params);
  validate_render_template(options.render_template);
  ConsolidateOutput out;
  if (assertions.empty()) return out;

  kb::EntitySet concepts;
  kb::EntitySet cultures;
  for (const auto& a : assertions) {
    concepts.insert(a.concept_name);
    cultures.insert(a.culture);
  }
  out.concept_clusters = cluster_entities(concepts.items(), kb::EntityKind::kConcept, embedder, options.params,
                                          entity_frequencies(assertions, kb::EntityKind::kConcept));
  out.culture_clusters = cluster_entities(cultures.items(), kb::EntityKind::kCulture, embedder, options.params,
                                          entity_frequencies(assertions, kb::EntityKind::kCulture));

  const auto buckets = partition_assertions(assertions, out.concept_clusters, out.culture_clusters);
  out.bucket_count = buckets.size();

  std::vector<std::vector<kb::AssertionCluster>> per_bucket(buckets.size());
  std::vector<std::string> bucket_errors(buckets.size());
  parallel_for(buckets.size(), options.concurrency, [&](std::size_t i) {
    try {
      per_bucket[i] = cluster_bucket(buckets[i], embedder, options.params, options.render_template);
    } catch (const std::exception& e) {
      bucket_errors[i] = e.what();
      per_bucket[i] = singleton_clusters(buckets[i]);
    }
  });

  std::vector<kb::AssertionCluster> raw;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (!bucket_errors[i].empty()) out.failures.push_back({bucket_id(buckets[i]), bucket_errors[i]});
    for (auto& c : per_bucket[i]) raw.push_back(std::move(c));
  }

  std::vector<RepresentativeResult> reps(raw.size());
  parallel_for(raw.size(), options.concurrency,
               [&](std::size_t i) { reps[i] = generate_representative(raw[i], gateway); });

  out.clusters.reserve(reps.size());
  for (auto& r : reps) {
    out.representative_calls += r.gateway_calls;
    if (r.fallback) {
      ++out.fallbacks;
      out.warnings.push_back(r.warning);
    }
    out.clusters.push_back(std::move(r.cluster));
  }
  sort_by_frequency(out.clusters);
  return out;
}

}  // namespace mango::consolidate

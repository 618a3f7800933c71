#include <gtest/gtest.h>

#include "mango/consolidate.hpp"
#include "mango/errors.hpp"
#include "mango/text.hpp"
#include "support.hpp"

using namespace mango;
using namespace mango::consolidate;
using kb::Assertion;

namespace {

embedding::Embedder stub() { return embedding::Embedder(std::make_shared<embedding::HashingProvider>(64)); }

kb::EntityCluster entity(std::string id, kb::EntityKind kind, std::vector<std::string> members) {
  kb::EntityCluster c;
  c.id = std::move(id);
  c.kind = kind;
  c.representative = members.front();
  c.members = std::move(members);
  return c;
}

}  // namespace

TEST(Render, TemplateAndTrimming) {
  EXPECT_EQ(render_for_embedding({"tipping", "Japan", "Not a common practice", 1, {}}), "tipping: Not a common practice");
  EXPECT_EQ(render_for_embedding({"  tipping ", "Japan", " Not a common practice  ", 1, {}}),
            "tipping: Not a common practice");
  EXPECT_EQ(render_for_embedding({"tea", "Japan", "Green.", 1, {}}), render_for_embedding({"tea", "India", "Green.", 1, {}}));
  EXPECT_EQ(render_for_embedding({"tea", "Japan", "Green.", 1, {}}, "{culture} / {concept}"), "Japan / tea");
  EXPECT_THROW(validate_render_template("{unknown}"), std::invalid_argument);
  EXPECT_THROW(validate_render_template("{concept"), std::invalid_argument);
}

TEST(Entities, LexicallyOverlappingTippingSubset) {
  auto e = stub();
  const std::vector<std::string> concepts = {"tipping", "tipping at restaurants", "tipping service staff"};
  const auto clusters = cluster_entities(concepts, kb::EntityKind::kConcept, e, HacParams{});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].id, "concept-0001");
  EXPECT_EQ(clusters[0].members.size(), 3u);
  EXPECT_EQ(clusters[0].representative, "tipping");  // equal frequency: shortest
}

TEST(Entities, JapaneseCultureSubset) {
  auto e = stub();
  const std::vector<std::string> cultures = {"Japanese", "Japanese culture"};
  const auto clusters = cluster_entities(cultures, kb::EntityKind::kCulture, e, HacParams{}, {{text::canonical_text("Japanese culture"), 4}});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].id, "culture-0001");
  EXPECT_EQ(clusters[0].representative, "Japanese culture");  // most frequent wins
}

TEST(Entities, Singleton) {
  auto e = stub();
  const std::vector<std::string> one = {"tea"};
  const auto clusters = cluster_entities(one, kb::EntityKind::kConcept, e, HacParams{});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].representative, "tea");
}

TEST(Partition, BucketsByClusterPair) {
  const auto tipping = mango::testing::tipping_assertions();
  const std::vector<kb::EntityCluster> concepts = {
      entity("concept-0001", kb::EntityKind::kConcept,
             {"tipping", "leaving tip", "tipping at restaurants.", "tipping service staff"})};
  const std::vector<kb::EntityCluster> cultures = {
      entity("culture-0001", kb::EntityKind::kCulture, {"Japan", "Japanese", "Japanese culture"})};
  const auto buckets = partition_assertions(tipping, concepts, cultures);
  ASSERT_EQ(buckets.size(), 1u);
  EXPECT_EQ(buckets[0].assertions.size(), 4u);

  std::vector<Assertion> grid;
  for (const char* c : {"tea", "rice"}) {
    for (const char* g : {"Japan", "India"}) grid.push_back({c, g, "Statement here.", 1, {}});
  }
  grid.push_back({"tea", "Japan", "Another statement.", 1, {}});
  const std::vector<kb::EntityCluster> cc = {entity("concept-0001", kb::EntityKind::kConcept, {"tea"}),
                                             entity("concept-0002", kb::EntityKind::kConcept, {"rice"})};
  const std::vector<kb::EntityCluster> gc = {entity("culture-0001", kb::EntityKind::kCulture, {"Japan"}),
                                             entity("culture-0002", kb::EntityKind::kCulture, {"India"})};
  const auto b = partition_assertions(grid, cc, gc);
  ASSERT_EQ(b.size(), 4u);
  std::size_t total = 0;
  for (const auto& x : b) total += x.assertions.size();
  EXPECT_EQ(total, grid.size());
  grid.push_back({"bread", "Japan", "Unmapped.", 1, {}});
  EXPECT_THROW(partition_assertions(grid, cc, gc), ValidationError);
}

TEST(ClusterBucket, TippingBucketFrequencyNine) {
  auto e = stub();
  const Bucket bucket{"concept-0001", "culture-0001", mango::testing::tipping_assertions()};
  const auto clusters = cluster_bucket(bucket, e, HacParams{});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].frequency, 9u);
  EXPECT_EQ(clusters[0].members.front().frequency, 5u);
  EXPECT_EQ(clusters[0].id, "concept-0001/culture-0001/001");
  EXPECT_EQ(clusters[0].similar_statements.size(), 4u);

  const Bucket one{"a", "b", {{"tea", "Japan", "Green tea daily.", 3, {}}}};
  const auto single = cluster_bucket(one, e, HacParams{});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].frequency, 3u);
}

TEST(ClusterBucket, TightThresholdConservesFrequency) {
  auto e = stub();
  const Bucket bucket{"c", "g", mango::testing::tipping_assertions()};
  HacParams tight;
  tight.distance_threshold = 1e-6;
  const auto clusters = cluster_bucket(bucket, e, tight);
  EXPECT_EQ(clusters.size(), 4u);
  EXPECT_EQ(kb::total_frequency(clusters), 9u);
}

TEST(Representative, PromptLines) {
  EXPECT_EQ(format_member_line({"tipping", "Japanese", "Not a common practice", 5, {}}),
            "- Concept: tipping. Culture: Japanese. Statement: Not a common practice. (Frequency: 5)");
  EXPECT_EQ(format_member_line({"tipping at restaurants.", "Japan", "Rude.", 1, {}}),
            "- Concept: tipping at restaurants. Culture: Japan. Statement: Rude. (Frequency: 1)");
}

TEST(Representative, ParsesLineAndJson) {
  Assertion a;
  ASSERT_TRUE(parse_representative(
      "Concept: tipping. Culture: Japan. Statement: Tipping is rare in Japan. (Frequency: 9)", a));
  EXPECT_EQ(a.concept_name, "tipping");
  EXPECT_EQ(a.culture, "Japan");
  EXPECT_EQ(a.statement, "Tipping is rare in Japan.");
  ASSERT_TRUE(parse_representative(R"({"concept":"tea","culture":"India","statement":"Chai is ubiquitous."})", a));
  EXPECT_EQ(a.culture, "India");
  EXPECT_FALSE(parse_representative("I am not sure.", a));
}

TEST(Representative, TippingReplayAndSingleton) {
  auto e = stub();
  auto gw = mango::testing::replay_gateway();
  const auto results = mango::testing::consolidate_tipping_bucket(e, *gw);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].cluster.statement, mango::testing::kTippingRepresentative);
  EXPECT_EQ(results[0].cluster.frequency, 9u);
  EXPECT_EQ(results[0].gateway_calls, 1u);

  kb::AssertionCluster single;
  single.id = "x";
  single.members = {{"tea", "Japan", "Green tea daily", 2, {}}};
  single.frequency = 2;
  auto backend = std::make_shared<mango::testing::FixtureBackend>();
  const auto r = generate_representative(single, *mango::testing::fixture_gateway(backend));
  EXPECT_EQ(r.gateway_calls, 0u);
  EXPECT_EQ(backend->calls(), 0u);
  EXPECT_EQ(r.cluster.statement, "Green tea daily");
  EXPECT_EQ(r.cluster.culture, "Japan");
}

TEST(Representative, FallbackAfterUnparseableReplies) {
  kb::AssertionCluster c;
  c.id = "x";
  c.members = {{"bathing", "Japan", "Public baths are popular.", 2, {}}, {"bathing", "Japan", "Baths relax.", 1, {}}};
  c.frequency = 3;
  // The fixture backend answers "bathing" clusters with prose on the first sample.
  const auto r = generate_representative(c, *mango::testing::fixture_gateway());
  EXPECT_FALSE(r.fallback);
  EXPECT_EQ(r.gateway_calls, 2u);

  class Mute : public llm::ChatBackend {
  public:
    llm::CompletionResult complete(const llm::CompletionRequest&) override { return {"no idea", {}}; }
  };
  llm::GatewayOptions opt;
  opt.mode = llm::GatewayMode::kLive;
  llm::Gateway mute(opt, std::make_shared<Mute>(), nullptr, std::make_shared<llm::SimulatedClock>());
  const auto f = generate_representative(c, mute);
  EXPECT_TRUE(f.fallback);
  EXPECT_EQ(f.cluster.statement, "Public baths are popular.");
  EXPECT_FALSE(f.warning.empty());
}

TEST(ConsolidateAll, DeterministicAndConserving) {
  std::vector<Assertion> corpus = mango::testing::tipping_assertions();
  const char* cultures[] = {"Japan", "USA", "India", "France"};
  for (int i = 0; i < 16; ++i) {
    corpus.push_back({i % 2 ? "tea" : "rice", cultures[i % 4],
                      std::string("Statement number ") + std::to_string(i % 5) + " about food.",
                      static_cast<std::uint64_t>(1 + i % 3), {}});
  }
  corpus = kb::merge_duplicates(corpus);
  auto run = [&] {
    auto e = stub();
    ConsolidateOptions opt;
    opt.concurrency = 3;
    return consolidate_all(corpus, e, *mango::testing::fixture_gateway(), opt);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.clusters, b.clusters);
  EXPECT_EQ(kb::total_frequency(a.clusters), kb::total_frequency(corpus));
  EXPECT_LE(a.clusters.size(), corpus.size());
  for (std::size_t i = 1; i < a.clusters.size(); ++i) EXPECT_GE(a.clusters[i - 1].frequency, a.clusters[i].frequency);
  for (const auto& c : a.clusters) EXPECT_NO_THROW(kb::validate(c));

  const auto top = select_top(a.clusters, 2);
  ASSERT_EQ(top.size(), std::min<std::size_t>(2, a.clusters.size()));
  EXPECT_EQ(top[0], a.clusters[0]);
  EXPECT_EQ(select_top(a.clusters, 1000).size(), a.clusters.size());
}

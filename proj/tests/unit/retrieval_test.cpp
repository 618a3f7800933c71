#include <gtest/gtest.h>

#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "mango/retrieval.hpp"
#include "support.hpp"

using namespace mango;
using namespace mango::retrieval;

namespace {

kb::AssertionCluster cluster(std::string id, std::string statement) {
  kb::AssertionCluster c;
  c.id = std::move(id);
  c.concept_name = "x";
  c.culture = "y";
  c.statement = statement;
  c.members = {{"x", "y", statement, 1, {}}};
  c.similar_statements = {statement};
  c.frequency = 1;
  return c;
}

std::vector<kb::AssertionCluster> small_kb() {
  return {cluster("a", "Tipping is not a common practice in Japan."),
          cluster("b", "Bowing is a common greeting in Japan."),
          cluster("c", "Bread is served with every meal in France.")};
}

}  // namespace

TEST(Index, BuildSaveLoad) {
  embedding::Embedder e(std::make_shared<embedding::HashingProvider>(64));
  const auto index = build_index(small_kb(), e);
  EXPECT_EQ(index.size(), 3u);
  mango::testing::TempDir dir;
  index.save(dir / "index.bin");
  const auto loaded = RetrievalIndex::load(dir / "index.bin");
  EXPECT_EQ(loaded.identity(), index.identity());
  ASSERT_EQ(loaded.size(), 3u);
  const RetrievalParams params{2, 0.1};
  const auto q = e.embed_one("Is tipping common in Japan?").values;
  const auto h1 = search(index, q, params);
  const auto h2 = search(loaded, q, params);
  ASSERT_EQ(h1.size(), h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    EXPECT_EQ(h1[i].cluster_id, h2[i].cluster_id);
    EXPECT_EQ(h1[i].similarity, h2[i].similarity);
  }
  EXPECT_THROW(build_index({}, e), std::invalid_argument);
}

TEST(Index, CorruptFileRejected) {
  mango::testing::TempDir dir;
  io::write_file_atomic(dir / "bad.bin", "not an index");
  EXPECT_THROW(RetrievalIndex::load(dir / "bad.bin"), Error);
}

TEST(Anonymize, RestaurantBillQuery) {
  dialogue::Narrative n{"n1",
                        "Carlos from Argentina is visiting Korea. He greets his new Korean friend, Jihoon, by giving "
                        "him a friendly pat on the back.",
                        {{{"Carlos", "Argentina"}, {"Jihoon", "Korea"}}}};
  const auto a = anonymize_narrative(n);
  EXPECT_EQ(a.text,
            "X from Argentina is visiting Korea. He greets his new Korean friend, Y, by giving him a friendly pat on "
            "the back.");
  EXPECT_TRUE(a.warnings.empty());
}

TEST(Anonymize, WholeWordsAndMissingNames) {
  dialogue::Narrative n{"n2", "Ali visits Alibaba headquarters with Ali\xE2\x80\x99s friend.",
                        {{{"Ali", "Egypt"}, {"Mei", "China"}}}};
  const auto a = anonymize_narrative(n);
  EXPECT_EQ(a.text, "X visits Alibaba headquarters with X\xE2\x80\x99s friend.");
  EXPECT_EQ(a.warnings.size(), 1u);  // Mei never appears

  dialogue::Narrative none{"n3", "Two travellers meet at a market.", {{{"Ana", "Peru"}, {"Bo", "Sweden"}}}};
  const auto b = anonymize_narrative(none);
  EXPECT_EQ(b.text, none.text);
  EXPECT_EQ(b.warnings.size(), 2u);
}

TEST(Anonymize, LongerNameFirst) {
  dialogue::Narrative n{"n4", "Ann and Anna share tea.", {{{"Ann", "UK"}, {"Anna", "Russia"}}}};
  EXPECT_EQ(anonymize_narrative(n).text, "X and Y share tea.");
}

TEST(Search, FloorCapAndSelfSimilarity) {
  embedding::Embedder e(std::make_shared<embedding::HashingProvider>(64));
  auto kb = small_kb();
  const auto index = build_index(kb, e);
  const auto q = e.embed_one(kb[1].statement).values;
  const auto hits = search(index, q, RetrievalParams{});
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].cluster_id, "b");
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-9);
  EXPECT_LE(hits.size(), 2u);
  for (const auto& h : hits) EXPECT_GT(h.similarity, 0.5);
  EXPECT_TRUE(search(index, q, RetrievalParams{2, 1.01}).empty());
  EXPECT_EQ(search(index, q, RetrievalParams{1, -1.0}).size(), 1u);
  EXPECT_EQ(search(index, q, RetrievalParams{10, -1.0}).size(), 3u);
}

TEST(Search, IdentityMismatchRejected) {
  embedding::Embedder e(std::make_shared<embedding::HashingProvider>(64));
  embedding::Embedder other(std::make_shared<embedding::HashingProvider>(32));
  const auto index = build_index(small_kb(), e);
  EXPECT_THROW(retrieve_text("tipping", index, other, RetrievalParams{}), ValidationError);
}

TEST(Params, Validation) {
  EXPECT_THROW(validate(RetrievalParams{0, 0.5}), std::invalid_argument);
  EXPECT_NO_THROW(validate(RetrievalParams{}));
}

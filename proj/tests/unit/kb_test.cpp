#include <gtest/gtest.h>

#include <fstream>

#include "mango/errors.hpp"
#include "mango/kb.hpp"
#include "support.hpp"

using namespace mango;
using kb::Assertion;

TEST(MergeDuplicates, FiveIdenticalRecordsBecomeOne) {
  std::vector<Assertion> in(5, Assertion{"tipping", "Japanese", "Not a common practice", 1, {}});
  for (int i = 0; i < 5; ++i) in[i].provenance = {"gen-" + std::to_string(i)};
  in[3].statement = "not a  common practice";
  const auto out = kb::merge_duplicates(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].frequency, 5u);
  EXPECT_EQ(out[0].statement, "Not a common practice");
  EXPECT_EQ(out[0].provenance.size(), 5u);
}

TEST(MergeDuplicates, EmptyAndDistinct) {
  EXPECT_TRUE(kb::merge_duplicates({}).empty());
  const std::vector<Assertion> in = {{"tea", "India", "Chai is ubiquitous", 1, {}},
                                     {"tea", "India", "Chai is everywhere", 1, {}}};
  const auto out = kb::merge_duplicates(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].frequency, 1u);
  EXPECT_EQ(out[1].frequency, 1u);
}

TEST(MergeDuplicates, IdempotentAndConserving) {
  std::vector<Assertion> in;
  for (int i = 0; i < 50; ++i) {
    in.push_back({"c" + std::to_string(i % 7), "g" + std::to_string(i % 3), "s" + std::to_string(i % 5),
                  static_cast<std::uint64_t>(1 + i % 4), {}});
  }
  const auto once = kb::merge_duplicates(in);
  EXPECT_EQ(kb::merge_duplicates(once), once);
  EXPECT_EQ(kb::total_frequency(once), kb::total_frequency(in));
}

TEST(Validate, RejectsBlankFieldsAndZeroFrequency) {
  EXPECT_THROW(kb::validate(Assertion{" ", "Japan", "x y", 1, {}}), ValidationError);
  EXPECT_THROW(kb::validate(Assertion{"tea", "Japan", "x y", 0, {}}), ValidationError);
  EXPECT_NO_THROW(kb::validate(Assertion{"tea", "Japan", "x y", 1, {}}));
}

TEST(Records, AssertionRoundTrip) {
  mango::testing::TempDir dir;
  const std::vector<Assertion> in = {{"tipping", "Japan", "Not a common practice", 5, {"a", "b"}},
                                     {"chopsticks", "Japan", "Standard eating utensils.", 1, {}},
                                     {"caf\xC3\xA9", "France", "Coffee \"au lait\" is common.", 2, {"c"}}};
  kb::write_assertions(dir / "a.jsonl", in);
  EXPECT_EQ(kb::read_assertions(dir / "a.jsonl"), in);
}

TEST(Records, EmptyStatementIsParseErrorAtLine) {
  mango::testing::TempDir dir;
  std::ofstream(dir / "bad.jsonl")
      << kb::to_json_line(Assertion{"tea", "Japan", "Green tea daily.", 1, {}}) << "\n"
      << R"({"concept":"tea","culture":"Japan","statement":"  ","frequency":1,"provenance":[]})" << "\n";
  try {
    kb::read_assertions(dir / "bad.jsonl");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Records, UnknownFieldRejected) {
  EXPECT_THROW(kb::assertion_from_json_line(
                   R"({"concept":"tea","culture":"Japan","statement":"a b","frequency":1,"provenance":[],"x":1})"),
               ParseError);
}

TEST(Records, ClusterFrequencyMismatchIsValidationError) {
  kb::AssertionCluster c;
  c.id = "x";
  c.concept_name = "tipping";
  c.culture = "Japan";
  c.statement = "Not a common practice.";
  c.members = {{"tipping", "Japan", "Not a common practice", 5, {}}};
  c.similar_statements = {"Not a common practice"};
  c.frequency = 5;
  EXPECT_NO_THROW(kb::validate(c));
  const auto line = kb::to_json_line(c);
  EXPECT_EQ(kb::cluster_from_json_line(line), c);
  c.frequency = 6;
  EXPECT_THROW(kb::validate(c), ValidationError);
  mango::testing::TempDir dir;
  std::ofstream(dir / "kb.jsonl") << kb::to_json_line(c) << "\n";
  EXPECT_THROW(kb::read_clusters(dir / "kb.jsonl"), Error);
}

TEST(EntitySet, DeduplicatesOnCanonicalKey) {
  kb::EntitySet s;
  EXPECT_TRUE(s.insert("Japan"));
  EXPECT_FALSE(s.insert(" japan "));
  EXPECT_TRUE(s.contains("JAPAN"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.items()[0], "Japan");
}

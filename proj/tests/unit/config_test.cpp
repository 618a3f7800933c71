#include <gtest/gtest.h>

#include "mango/config.hpp"
#include "mango/errors.hpp"
#include "mango/io.hpp"
#include "support.hpp"

using namespace mango;
using namespace mango::config;

namespace {

std::string error_key(const std::string& ini) {
  try {
    parse_config(ini);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, EmptyGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.generation.samples_per_prompt, 5u);
  EXPECT_DOUBLE_EQ(c.generation.temperature, 1.0);
  EXPECT_EQ(c.generation.examples_per_prompt, 5u);
  EXPECT_DOUBLE_EQ(c.consolidate.hac.distance_threshold, 1.5);
  EXPECT_EQ(c.retrieval.k, 2u);
  EXPECT_DOUBLE_EQ(c.retrieval.min_similarity, 0.5);
  EXPECT_EQ(c.llm.mode, llm::GatewayMode::kReplay);
  EXPECT_EQ(c.embedding.provider, EmbedderKind::kStub);
}

TEST(Config, ValuesAndComments) {
  const auto c = parse_config(
      "# hash comment\n[run]\n; semicolon comment\nseed = 42\nconcurrency=3\n[generation]\ntemperature = 0.7\n"
      "clean_seeds = yes\n[consolidate]\nthreshold = 0.9\n[retrieval]\nk = 4\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.concurrency, 3u);
  EXPECT_DOUBLE_EQ(c.generation.temperature, 0.7);
  EXPECT_TRUE(c.generation.clean_seeds);
  EXPECT_DOUBLE_EQ(c.consolidate.hac.distance_threshold, 0.9);
  EXPECT_EQ(c.retrieval.k, 4u);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(error_key("[consolidate]\nthreshold = -1\n"), "consolidate.threshold");
  EXPECT_EQ(error_key("[generation]\ntemprature = 1.0\n"), "generation.temprature");
  EXPECT_EQ(error_key("[generation]\ntemperature = hot\n"), "generation.temperature");
  EXPECT_EQ(error_key("[retrieval]\nk = 0\n"), "retrieval.k");
  EXPECT_EQ(error_key("[llm]\nmode = dream\n"), "llm.mode");
  EXPECT_EQ(error_key("[dialogue]\ntask = poem\n"), "dialogue.task");
  EXPECT_EQ(error_key("[run]\nconcurrency = 0\n"), "run.concurrency");
  EXPECT_EQ(error_key("[consolidate]\nrender_template = {concept} {stance}\n"), "consolidate.render_template");
}

TEST(Config, PathsResolveFromConfigDirectory) {
  mango::testing::TempDir dir;
  std::filesystem::create_directories(dir / "sub");
  io::write_file_atomic(dir / "sub" / "c.ini", "[run]\nwork_dir = out\n[llm]\nreplay_dir = ../rep\n");
  const auto c = load_config(dir / "sub" / "c.ini");
  EXPECT_EQ(c.work_dir.lexically_normal(), (dir / "sub" / "out").lexically_normal());
  EXPECT_EQ(resolve(c, "seeds/x.txt").lexically_normal(), (dir / "sub" / "seeds" / "x.txt").lexically_normal());
  EXPECT_EQ(resolve(c, "/abs/x.txt"), std::filesystem::path("/abs/x.txt"));
  EXPECT_TRUE(resolve(c, {}).empty());
}

TEST(Config, MissingFileIsAnError) {
  mango::testing::TempDir dir;
  EXPECT_THROW(load_config(dir / "none.ini"), Error);
}

#include <benchmark/benchmark.h>

#include <random>

#include "mango/embedding.hpp"
#include "mango/kb.hpp"
#include "mango/retrieval.hpp"

namespace {

using namespace mango;

const char* const kWords[] = {"tea",   "rice",   "bow",    "gift",  "shoes", "tip",    "bread", "wine",
                              "greet", "temple", "market", "dance", "host",  "family", "meal",  "bill"};

std::vector<kb::AssertionCluster> corpus(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kWords) - 1);
  std::vector<kb::AssertionCluster> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = "People";
    for (int w = 0; w < 6; ++w) s += std::string(" ") + kWords[pick(rng)];
    kb::Assertion a{"c", "k", s, 1, {}};
    kb::AssertionCluster c;
    c.id = "c" + std::to_string(i);
    c.concept_name = "c";
    c.culture = "k";
    c.statement = s;
    c.similar_statements = {s};
    c.frequency = 1;
    c.members = {a};
    out.push_back(std::move(c));
  }
  return out;
}

embedding::Embedder stub_embedder() {
  return embedding::Embedder(std::make_shared<embedding::HashingProvider>(64), nullptr, 256, 1);
}

void BM_Search(benchmark::State& state) {
  auto embedder = stub_embedder();
  const auto index = retrieval::build_index(corpus(static_cast<std::size_t>(state.range(0))), embedder);
  const auto query = embedder.embed_one("tip the host after a meal").values;
  const retrieval::RetrievalParams params{2, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieval::search(index, query, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Search)->RangeMultiplier(4)->Range(256, 65536);

void BM_RetrieveText(benchmark::State& state) {
  auto embedder = stub_embedder();
  const auto index = retrieval::build_index(corpus(4096), embedder);
  const retrieval::RetrievalParams params{2, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieval::retrieve_text("Carlos greets Jihoon at the temple market", index, embedder, params));
  }
}
BENCHMARK(BM_RetrieveText);

}  // namespace

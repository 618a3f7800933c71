#include <benchmark/benchmark.h>

#include "mango/filtering.hpp"

namespace {

using namespace mango;

void BM_ApplyFilters(benchmark::State& state) {
  const filtering::CultureBlocklist blocklist;
  std::vector<kb::Assertion> input;
  const char* const cultures[] = {"Japan", "Western culture", "some cultures", "Mexico", "non-Muslim"};
  for (std::size_t i = 0; i < 10000; ++i) {
    input.push_back({"tipping", cultures[i % std::size(cultures)],
                     "Leaving a tip at restaurants is generally considered polite. Number " + std::to_string(i),
                     1,
                     {}});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(filtering::apply_filters(input, blocklist));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(input.size()));
}
BENCHMARK(BM_ApplyFilters)->Unit(benchmark::kMillisecond);

}  // namespace

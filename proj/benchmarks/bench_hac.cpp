#include <benchmark/benchmark.h>

#include <random>

#include "mango/hac.hpp"
#include "mango/embedding.hpp"

namespace {

std::vector<std::vector<double>> unit_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& p : out) {
    for (auto& x : p) x = g(rng);
    p = mango::embedding::normalize(std::span<const double>(p));
  }
  return out;
}

void BM_WardDendrogram(benchmark::State& state) {
  const auto pts = unit_points(static_cast<std::size_t>(state.range(0)), 384, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mango::consolidate::ward_dendrogram(pts));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WardDendrogram)->RangeMultiplier(2)->Range(32, 1024)->Complexity()->Unit(benchmark::kMillisecond);

void BM_CutDendrogram(benchmark::State& state) {
  const auto pts = unit_points(static_cast<std::size_t>(state.range(0)), 64, 2);
  const auto dendrogram = mango::consolidate::ward_dendrogram(pts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mango::consolidate::cut_dendrogram(dendrogram, 1.5));
  }
}
BENCHMARK(BM_CutDendrogram)->Arg(256)->Arg(1024);

}  // namespace

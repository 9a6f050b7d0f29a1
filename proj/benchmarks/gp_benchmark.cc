// Copyright 2026 The GPAtk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <limits>
#include <random>
#include <set>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/gpengine.h"
#include "gpatk/recmodel.h"

namespace gpatk {
namespace {

InteractionDataset RandomGraph(std::size_t n, std::size_t m, std::size_t nnz,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeIndex> user(0, static_cast<NodeIndex>(n - 1));
  std::uniform_int_distribution<NodeIndex> item(0, static_cast<NodeIndex>(m - 1));
  std::set<InteractionDataset::Edge> edges;
  while (edges.size() < nnz) edges.emplace(user(rng), item(rng));
  const std::vector<InteractionDataset::Edge> list(edges.begin(), edges.end());
  return InteractionDataset::FromEdges(n, m, list, n);
}

void BM_ApplyGradientPassing(benchmark::State& state) {
  const auto nnz = static_cast<std::size_t>(state.range(0));
  const InteractionDataset ds = RandomGraph(4000, 4000, nnz, 1);
  const EmbeddingTable r = InitEmbeddings(4000, 4000, 32, 1);
  const GradientBuffer g(4000, 4000, InitEmbeddings(4000, 4000, 32, 2).values());
  GpConfig cfg;
  cfg.xi_odd = cfg.xi_even = -std::numeric_limits<double>::infinity();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ApplyGradientPassing(g, r, ds, cfg));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApplyGradientPassing)
    ->RangeMultiplier(2)
    ->Range(10000, 80000)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oN);

void BM_TrainEpoch(benchmark::State& state) {
  const InteractionDataset ds = RandomGraph(1000, 800, 20000, 2);
  TrainConfig cfg;
  cfg.batch_size = 1024;
  cfg.dim = 32;
  const bool with_gp = state.range(0) != 0;
  GpConfig gp;
  TrainHooks hooks;
  if (with_gp) hooks.gp = &gp;
  EmbeddingTable r = InitEmbeddings(1000, 800, 32, 3);
  std::uint64_t epoch = 0;
  for (auto _ : state) TrainEpoch(r, ds, cfg, epoch++, hooks);
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TopKForUsers(benchmark::State& state) {
  const InteractionDataset ds = RandomGraph(1000, 2000, 20000, 4);
  const EmbeddingTable r = InitEmbeddings(1000, 2000, 32, 5);
  const std::vector<NodeIndex> users = RealUsers(ds);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(TopKForUsers(r, ds, users, k));
  }
}
BENCHMARK(BM_TopKForUsers)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace gpatk

BENCHMARK_MAIN();

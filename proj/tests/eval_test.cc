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

#include "gpatk/eval.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>

#include "gpatk/error.h"
#include "testing/fixtures.h"
#include "testing/oracles.h"

namespace gpatk {
namespace {

std::vector<TopKList> AllTopK(const EmbeddingTable& r,
                              const InteractionDataset& ds, std::size_t k) {
  const auto users = RealUsers(ds);
  return TopKForUsers(r, ds, users, k);
}

TopKList List(NodeIndex user, std::vector<NodeIndex> items) {
  TopKList l;
  l.user = user;
  l.items = std::move(items);
  return l;
}

TEST(MetricsTest, HitRatioAndRecallMatchEnumeration) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 4 + seed % 5, m = 9 + seed % 4;
    const std::size_t real = n - seed % 2;
    const auto ds = testing::RandomDataset(n, m, 0.3, seed, real);
    const auto r = testing::RandomTable(n, m, 3, seed + 300);
    const std::size_t k = 1 + seed % 4;
    const auto dense_y = testing::DenseY(ds);
    bool full = false;
    for (NodeIndex u = 0; u < static_cast<NodeIndex>(n); ++u) {
      full |= ds.UserDegree(u) + k > m;
    }
    if (full) continue;
    const auto topk = AllTopK(r, ds, k);
    const auto users = testing::UsersOf(r);
    const auto items = testing::ItemsOf(r);
    const NodeIndex target = static_cast<NodeIndex>(seed % m);
    const double hr_oracle = testing::HitRatioOracle(
        users, items, dense_y, static_cast<int>(real), target,
        static_cast<int>(k));
    if (hr_oracle < 0) {
      EXPECT_THROW(HitRatio(topk, ds, target, k), Error);
    } else {
      EXPECT_EQ(HitRatio(topk, ds, target, k), hr_oracle) << seed;
    }
    const TargetSpec targets{{target, static_cast<NodeIndex>((seed + 3) % m)}};
    const double rec_oracle = testing::RecallOracle(
        users, items, dense_y, static_cast<int>(real),
        {targets.items.begin(), targets.items.end()}, static_cast<int>(k));
    if (rec_oracle >= 0) {
      EXPECT_NEAR(RecallAtK(topk, ds, targets, k), rec_oracle, 1e-15) << seed;
    }
    ++compared;
  }
  EXPECT_GE(compared, 30);
}

TEST(MetricsTest, SingletonRecallEqualsHitRatio) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = testing::RandomDataset(8, 12, 0.25, seed);
    const auto r = testing::RandomTable(8, 12, 4, seed + 1);
    const auto topk = AllTopK(r, ds, 3);
    const NodeIndex target = static_cast<NodeIndex>(seed % 12);
    double hr = 0.0;
    try {
      hr = HitRatio(topk, ds, target, 3);
    } catch (const Error&) {
      continue;
    }
    EXPECT_EQ(RecallAtK(topk, ds, TargetSpec{{target}}, 3), hr);
  }
}

TEST(MetricsTest, UndefinedWhenEveryUserHasTheTarget) {
  const auto ds = InteractionDataset::FromEdges(
      2, 4, std::vector<InteractionDataset::Edge>{{0, 1}, {1, 1}}, 2);
  const auto topk = AllTopK(EmbeddingTable(2, 4, 2), ds, 2);
  try {
    HitRatio(topk, ds, 1, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedMetric);
  }
  EXPECT_THROW(RecallAtK(topk, ds, TargetSpec{{1}}, 2), Error);
  EXPECT_THROW(HitRatio(topk, ds, 7, 2), Error);
}

TEST(JaccardTest, KnownValues) {
  const std::vector<TopKList> a = {List(0, {1, 2, 3, 4}), List(1, {5, 6})};
  EXPECT_EQ(JaccardTopKSimilarity(a, a), 1.0);
  const std::vector<TopKList> disjoint = {List(0, {7, 8, 9, 10}),
                                          List(1, {1, 2})};
  EXPECT_EQ(JaccardTopKSimilarity(a, disjoint), 0.0);
  // |{1,2,3,4} & {2,3,4,9}| / |union| = 3/5, second pair 1/3.
  const std::vector<TopKList> mixed = {List(1, {6, 7}),
                                       List(0, {9, 4, 3, 2})};
  EXPECT_DOUBLE_EQ(JaccardTopKSimilarity(a, mixed), (0.6 + 1.0 / 3.0) / 2);
  const std::vector<TopKList> one = {List(0, {1, 2, 3, 4})};
  EXPECT_THROW(JaccardTopKSimilarity(a, one), Error);
  const std::vector<TopKList> other_users = {List(0, {1}), List(2, {5})};
  EXPECT_THROW(JaccardTopKSimilarity(a, other_users), Error);
}

TEST(JaccardTest, MatchesOracle) {
  const auto ds = testing::RandomDataset(10, 15, 0.2, 4);
  const auto a = AllTopK(testing::RandomTable(10, 15, 3, 5), ds, 4);
  const auto b = AllTopK(testing::RandomTable(10, 15, 3, 6), ds, 4);
  std::vector<std::set<int>> sa, sb;
  for (std::size_t u = 0; u < a.size(); ++u) {
    sa.emplace_back(a[u].items.begin(), a[u].items.end());
    sb.emplace_back(b[u].items.begin(), b[u].items.end());
  }
  EXPECT_NEAR(JaccardTopKSimilarity(a, b), testing::JaccardOracle(sa, sb),
              1e-15);
}

TEST(CosineTest, TrivialCases) {
  const auto ds = InteractionDataset::FromEdges(
      2, 2, std::vector<InteractionDataset::Edge>{{0, 0}}, 2);
  GradientBuffer g(2, 2, 2);
  g.values() << 1, 0, 0, 1, 2, 0, 0, 0;
  const std::vector<InteractionDataset::Edge> pairs = {{0, 1}, {1, 0}};
  const auto stats = GradientPairCosine(ds, g, pairs);
  EXPECT_DOUBLE_EQ(stats.interacted_mean, 1.0);
  EXPECT_DOUBLE_EQ(stats.interacted_std, 0.0);
  // (0,1): zero vector gives 0; (1,0): orthogonal gives 0.
  EXPECT_DOUBLE_EQ(stats.random_mean, 0.0);
}

TEST(CosineTest, InvariantUnderPairOrder) {
  const auto ds = testing::RandomDataset(8, 9, 0.3, 7);
  const auto t = testing::RandomTable(8, 9, 3, 8);
  const GradientBuffer g(8, 9, t.values());
  auto pairs = SampleRandomPairs(ds, 20, 9);
  for (const auto& [u, i] : pairs) EXPECT_FALSE(ds.HasInteraction(u, i));
  const auto a = GradientPairCosine(ds, g, pairs);
  std::reverse(pairs.begin(), pairs.end());
  const auto b = GradientPairCosine(ds, g, pairs);
  EXPECT_NEAR(a.random_mean, b.random_mean, 1e-15);
  EXPECT_NEAR(a.random_std, b.random_std, 1e-15);
}

TEST(AggregateTest, MeansAndSampleStd) {
  const std::vector<MetricRecord> records = {
      {"a", 0, 1, 5, 0.2, 0.1}, {"b", 0, 1, 5, 0.5, 0.5},
      {"a", 1, 1, 5, 0.4, 0.3}, {"a", 0, 2, 5, 0.6, 0.2}};
  const auto agg = AggregateRecords(records);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].victim, "a");
  EXPECT_EQ(agg[0].count, 3u);
  EXPECT_NEAR(agg[0].hr_mean, 0.4, 1e-12);
  EXPECT_NEAR(agg[0].hr_std, 0.2, 1e-12);
  EXPECT_NEAR(agg[0].recall_mean, 0.2, 1e-12);
  EXPECT_NEAR(agg[0].recall_std, 0.1, 1e-12);
  EXPECT_EQ(agg[1].hr_std, 0.0);
}

TEST(EvaluateAttackTest, EmptyFakeSetMatchesBaseline) {
  const auto ds = testing::RandomDataset(20, 15, 0.25, 10);
  VictimConfig victim{"mf", {}};
  victim.train.batch_size = 10;
  victim.train.dim = 4;
  victim.train.epochs = 3;
  const std::vector<VictimConfig> victims = {victim};
  const std::vector<TargetSpec> targets = {{{2}}, {{5, 9}}};
  const std::vector<std::uint64_t> seeds = {1, 2};
  const auto base = EvaluateAttack(ds, victims, targets, 5, seeds);
  const auto same = EvaluateAttack(InjectFake(ds, FakeInteractions{3, {}}),
                                   victims, targets, 5, seeds);
  ASSERT_EQ(base.records.size(), 4u);
  EXPECT_EQ(MetricsReportCsv(base), MetricsReportCsv(same));
  const auto agg = AggregateRecords(base.records);
  EXPECT_EQ(agg[0].hr_mean, base.aggregates[0].hr_mean);
  EXPECT_THAT(MetricsReportJson(base, "abc", 1),
              ::testing::HasSubstr("\"config_hash\": \"abc\""));
  EXPECT_THAT(MetricsReportCsv(base),
              ::testing::StartsWith("victim,target_set,seed,hr,recall\n"));
}

}  // namespace
}  // namespace gpatk

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

#include "gpatk/attack.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <map>
#include <set>

#include "gpatk/error.h"
#include "testing/fixtures.h"

namespace gpatk {
namespace {

SurrogateConfig SmallSurrogate() {
  SurrogateConfig cfg;
  cfg.train.lr = 0.05;
  cfg.train.batch_size = 16;
  cfg.train.negs_per_pos = 2;
  cfg.train.dim = 4;
  cfg.retrain_epochs = 2;
  cfg.adv_epochs = 1;
  return cfg;
}

void ExpectStructurallyValid(const FakeInteractions& fake,
                             const InteractionDataset& ds,
                             const TargetSpec& targets,
                             const AttackBudget& budget) {
  EXPECT_EQ(fake.n_fake(), budget.n_fake);
  EXPECT_EQ(fake.budget, budget.tau);
  EXPECT_EQ(fake.CheckInvariants(ds.n_items(), targets.items), std::nullopt);
  for (const auto& row : fake.rows) EXPECT_EQ(row.size(), budget.tau);
  const InteractionDataset poisoned = InjectFake(ds, fake);
  EXPECT_EQ(poisoned.CheckInvariants(), std::nullopt);
  EXPECT_EQ(poisoned.fake_user_count(), budget.n_fake);
}

TEST(HeuristicAttackTest, RowsAreValidForEveryKind) {
  const auto ds = testing::RandomDataset(30, 20, 0.2, 1);
  const TargetSpec targets{{3, 17}};
  const AttackBudget budget{4, 6};
  for (auto kind : {HeuristicKind::kRandom, HeuristicKind::kBandwagon}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ExpectStructurallyValid(HeuristicAttack(kind, ds, targets, budget, seed),
                              ds, targets, budget);
    }
  }
}

TEST(HeuristicAttackTest, BandwagonFillsHalfTheFreeSlotsWithPopularItems) {
  const auto ds = testing::RandomDataset(40, 30, 0.2, 2);
  const TargetSpec targets{{0}};
  const AttackBudget budget{5, 7};
  const auto popular = PopularItems(ds);
  const std::set<NodeIndex> pop(popular.begin(), popular.end());
  const auto fake =
      HeuristicAttack(HeuristicKind::kBandwagon, ds, targets, budget, 3);
  for (const auto& row : fake.rows) {
    std::size_t hits = 0;
    for (NodeIndex i : row) hits += (i != 0 && pop.count(i)) ? 1 : 0;
    EXPECT_GE(hits, std::min<std::size_t>(3, pop.size() - pop.count(0)));
  }
}

TEST(HeuristicAttackTest, BudgetErrors) {
  const auto ds = testing::RandomDataset(10, 8, 0.3, 4);
  const auto attack = [&](TargetSpec t, AttackBudget b) {
    HeuristicAttack(HeuristicKind::kRandom, ds, t, b, 0);
  };
  try {
    attack({{1, 2, 3}}, {1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBudget);
  }
  EXPECT_THROW(attack({{1}}, {0, 2}), Error);
  EXPECT_THROW(attack({{1}}, {1, 9}), Error);
  EXPECT_THROW(attack({{}}, {1, 2}), Error);
  EXPECT_THROW(attack({{2, 2}}, {1, 2}), Error);
  EXPECT_THROW(attack({{8}}, {1, 2}), Error);
}

TEST(PopularItemsTest, OrderedByDegreeThenIndex) {
  const auto ds = InteractionDataset::FromEdges(
      3, 5,
      std::vector<InteractionDataset::Edge>{
          {0, 4}, {1, 4}, {2, 4}, {0, 2}, {1, 2}, {0, 1}, {1, 3}},
      3);
  EXPECT_THAT(PopularItems(ds, 1.0), ::testing::ElementsAre(4, 2, 1, 3, 0));
  EXPECT_THAT(PopularItems(ds, 0.1), ::testing::ElementsAre(4));
}

TEST(DefaultBudgetTest, OnePercentOfUsersAndAverageDegree) {
  std::vector<InteractionDataset::Edge> edges;
  for (NodeIndex u = 0; u < 250; ++u) {
    for (NodeIndex i = 0; i < 3 + u % 2; ++i) edges.emplace_back(u, i);
  }
  const auto ds = InteractionDataset::FromEdges(250, 10, edges, 250);
  const AttackBudget b = DefaultBudget(ds);
  EXPECT_EQ(b.n_fake, 3u);
  EXPECT_EQ(b.tau, 4u);  // 3.5 rounds up
}

TEST(SampledRetrainSetTest, ExactCountAndAllFakeEdges) {
  const auto ds = testing::RandomDataset(20, 15, 0.3, 5);
  FakeInteractions fake;
  fake.budget = 3;
  fake.rows = {{0, 4, 9}, {1, 2, 3}};
  for (double ratio : {0.1, 0.5, 0.9, 1.0}) {
    const auto s = SampledRetrainSet(ds, fake, ratio, 7);
    const std::size_t want =
        static_cast<std::size_t>(std::floor(ratio * ds.nnz() + 1e-9));
    EXPECT_EQ(s.nnz(), want + fake.nnz()) << ratio;
    EXPECT_EQ(s.fake_user_count(), 2u);
    for (std::size_t r = 0; r < 2; ++r) {
      for (NodeIndex i : fake.rows[r]) {
        EXPECT_TRUE(s.HasInteraction(static_cast<NodeIndex>(20 + r), i));
      }
    }
    for (const auto& [u, i] : s.Edges()) {
      if (u < 20) EXPECT_TRUE(ds.HasInteraction(u, i));
    }
  }
  EXPECT_THROW(SampledRetrainSet(ds, fake, 0.0, 1), Error);
}

TEST(SampledRetrainSetTest, EdgesAreKeptUniformly) {
  const auto ds = testing::RandomDataset(10, 10, 0.4, 6);
  const FakeInteractions none{1, {}};
  std::map<InteractionDataset::Edge, int> counts;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& e : SampledRetrainSet(ds, none, 0.3, t).Edges()) {
      ++counts[e];
    }
  }
  const double want = std::floor(0.3 * ds.nnz() + 1e-9);
  const double expected = trials * want / static_cast<double>(ds.nnz());
  double chi2 = 0.0;
  for (const auto& e : ds.Edges()) {
    const double diff = counts[e] - expected;
    chi2 += diff * diff / expected;
  }
  // Chi-square with nnz - 1 degrees of freedom; mean nnz - 1, generous bound.
  const double dof = static_cast<double>(ds.nnz()) - 1.0;
  EXPECT_LT(chi2, dof + 5.0 * std::sqrt(2.0 * dof));
}

TEST(AdversarialTest, GradientMatchesCentralDifferences) {
  const auto ds = testing::RandomDataset(6, 7, 0.3, 8);
  const auto r = testing::RandomTable(6, 7, 3, 9);
  const TargetSpec targets{{2, 5}};
  const GradientBuffer g = AdversarialGradient(r, ds, targets);
  EmbeddingTable probe = r;
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < r.values().size(); ++k) {
    double& x = probe.values().data()[k];
    const double saved = x;
    x = saved + h;
    const double up = AdversarialLoss(probe, ds, targets);
    x = saved - h;
    const double down = AdversarialLoss(probe, ds, targets);
    x = saved;
    EXPECT_NEAR(g.values().data()[k], (up - down) / (2 * h), 1e-8);
  }
}

TEST(Dpa2dlTest, ValidRowsDeterministicAndSeedDependent) {
  const auto ds = testing::RandomDataset(25, 18, 0.25, 10);
  const TargetSpec targets{{4, 11}};
  const AttackBudget budget{3, 5};
  const SurrogateConfig cfg = SmallSurrogate();
  for (const std::optional<GpConfig>& gp :
       {std::optional<GpConfig>{}, std::optional<GpConfig>{GpConfig{}}}) {
    AttackTrace trace;
    const auto a = Dpa2dlGpAttack(ds, targets, budget, cfg, gp, 1,
                                  std::nullopt, &trace);
    ExpectStructurallyValid(a, ds, targets, budget);
    EXPECT_EQ(trace.retrain_seconds.size(), budget.n_fake);
    EXPECT_EQ(trace.gp_applications > 0, gp.has_value());
    const auto b = Dpa2dlGpAttack(ds, targets, budget, cfg, gp, 1);
    EXPECT_EQ(a.rows, b.rows);
  }
}

TEST(Dpa2dlTest, PretrainAndSampling) {
  const auto ds = testing::RandomDataset(25, 18, 0.25, 11);
  const TargetSpec targets{{0}};
  const AttackBudget budget{2, 4};
  SurrogateConfig cfg = SmallSurrogate();
  cfg.pretrain = true;
  cfg.sample_ratio = 0.5;
  cfg.train.epochs = 3;
  const auto fake =
      Dpa2dlGpAttack(ds, targets, budget, cfg, GpConfig{}, 2);
  ExpectStructurallyValid(fake, ds, targets, budget);
  const EmbeddingTable wrong(3, 3, 4);
  EXPECT_THROW(Dpa2dlGpAttack(ds, targets, budget, cfg, std::nullopt, 2, wrong),
               Error);
}

TEST(Dpa2dlTest, RejectsPoisonedInputAndBprSurrogate) {
  const auto ds = testing::RandomDataset(10, 8, 0.3, 12, 8);
  EXPECT_THROW(Dpa2dlGpAttack(ds, {{1}}, {1, 2}, SmallSurrogate(),
                              std::nullopt, 0),
               Error);
  SurrogateConfig bpr = SmallSurrogate();
  bpr.train.loss = LossKind::kBpr;
  EXPECT_THROW(bpr.Validate(), Error);
}

}  // namespace
}  // namespace gpatk

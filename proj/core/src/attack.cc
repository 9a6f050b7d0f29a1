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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "gpatk/error.h"
#include "gpatk/random.h"
#include "math_util.h"

namespace gpatk {

using internal::Sigmoid;
using internal::Softplus;

namespace {

// Draws `count` distinct elements of `pool` (partial Fisher-Yates); the pool
// is reordered in place.
std::vector<NodeIndex> DrawDistinct(std::vector<NodeIndex>& pool,
                                    std::size_t count, Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + UniformIndex(rng, pool.size() - k);
    std::swap(pool[k], pool[pick]);
  }
  return {pool.begin(), pool.begin() + static_cast<long>(count)};
}

std::vector<NodeIndex> SortedTargets(const TargetSpec& targets) {
  std::vector<NodeIndex> sorted = targets.items;
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

void CheckBudget(const AttackBudget& budget, const TargetSpec& targets,
                 std::size_t n_items) {
  if (budget.n_fake < 1 || budget.tau < 1) {
    throw Error(ErrorKind::kBudget, "n_fake and tau must be >= 1");
  }
  if (budget.tau < targets.items.size()) {
    throw Error(ErrorKind::kBudget,
                "tau=" + std::to_string(budget.tau) + " is smaller than the " +
                    std::to_string(targets.items.size()) + " target items");
  }
  if (budget.tau > n_items) {
    throw Error(ErrorKind::kBudget, "tau exceeds the number of items");
  }
}

double AccumulateAdversarial(const EmbeddingTable& embeddings,
                             const InteractionDataset& dataset,
                             std::span<const NodeIndex> targets, double weight,
                             GradientBuffer* gradient) {
  double loss = 0.0;
  for (std::size_t u = 0; u < dataset.real_user_count(); ++u) {
    const auto user = static_cast<NodeIndex>(u);
    for (NodeIndex t : targets) {
      if (dataset.HasInteraction(user, t)) continue;
      const double s = embeddings.User(user).dot(embeddings.Item(t));
      loss += weight * Softplus(-s);
      if (gradient != nullptr) {
        const double coeff = -weight * Sigmoid(-s);
        gradient->User(user) += coeff * embeddings.Item(t);
        gradient->Item(t) += coeff * embeddings.User(user);
      }
    }
  }
  return loss;
}

// Surrogate for the first `n_real + fake_rows` users: pretrained rows are
// copied and fake-user rows freshly initialized.
EmbeddingTable ExtendPretrained(const EmbeddingTable& pretrained,
                                std::size_t fake_rows, std::uint64_t seed) {
  const std::size_t n_real = pretrained.n_users();
  const std::size_t m = pretrained.n_items();
  const std::size_t d = pretrained.dim();
  const EmbeddingTable fresh = InitEmbeddings(fake_rows, m, d, seed);
  EmbeddingTable table(n_real + fake_rows, m, d);
  table.Users().topRows(static_cast<Eigen::Index>(n_real)) = pretrained.Users();
  table.Users().bottomRows(static_cast<Eigen::Index>(fake_rows)) =
      fresh.Users();
  table.Items() = pretrained.Items();
  return table;
}

}  // namespace

AttackBudget DefaultBudget(const InteractionDataset& dataset) {
  const std::size_t n_real = dataset.real_user_count();
  if (n_real == 0) throw Error(ErrorKind::kArgument, "no real users");
  std::size_t real_nnz = 0;
  for (std::size_t u = 0; u < n_real; ++u) {
    real_nnz += dataset.UserDegree(static_cast<NodeIndex>(u));
  }
  AttackBudget budget;
  budget.n_fake = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(n_real))));
  budget.tau = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(real_nnz) /
                                               static_cast<double>(n_real))));
  return budget;
}

void TargetSpec::Validate(std::size_t n_items) const {
  if (items.empty()) throw Error(ErrorKind::kArgument, "no target items");
  std::vector<NodeIndex> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::kArgument, "duplicate target items");
  }
  if (sorted.front() < 0 || static_cast<std::size_t>(sorted.back()) >= n_items) {
    throw Error(ErrorKind::kBounds, "target item out of range");
  }
}

void SurrogateConfig::Validate() const {
  train.Validate();
  if (train.loss != LossKind::kBce) {
    throw Error(ErrorKind::kArgument, "the surrogate is trained with BCE");
  }
  if (retrain_epochs < 1) {
    throw Error(ErrorKind::kArgument, "retrain_epochs must be >= 1");
  }
  if (adv_epochs < 0) throw Error(ErrorKind::kArgument, "adv_epochs < 0");
  if (!(adv_weight > 0.0)) {
    throw Error(ErrorKind::kArgument, "adv_weight must be > 0");
  }
  if (!(sample_ratio >= 0.0 && sample_ratio <= 1.0)) {
    throw Error(ErrorKind::kArgument, "sample_ratio must lie in [0, 1]");
  }
}

std::vector<NodeIndex> PopularItems(const InteractionDataset& dataset,
                                    double fraction) {
  const std::size_t m = dataset.n_items();
  std::vector<NodeIndex> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
    return dataset.ItemDegree(a) > dataset.ItemDegree(b);
  });
  const auto count = std::min<std::size_t>(
      m, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(m))));
  order.resize(count);
  return order;
}

FakeInteractions HeuristicAttack(HeuristicKind kind,
                                 const InteractionDataset& dataset,
                                 const TargetSpec& targets,
                                 const AttackBudget& budget,
                                 std::uint64_t seed) {
  targets.Validate(dataset.n_items());
  CheckBudget(budget, targets, dataset.n_items());
  const std::vector<NodeIndex> target_set = SortedTargets(targets);
  const auto is_target = [&](NodeIndex i) {
    return std::binary_search(target_set.begin(), target_set.end(), i);
  };
  std::vector<NodeIndex> popular;
  for (NodeIndex i : PopularItems(dataset)) {
    if (!is_target(i)) popular.push_back(i);
  }

  Rng rng(DeriveSeed(seed, kind == HeuristicKind::kRandom ? "random-attack"
                                                          : "bandwagon-attack"));
  const std::size_t free_slots = budget.tau - target_set.size();
  FakeInteractions fake;
  fake.budget = budget.tau;
  for (std::size_t r = 0; r < budget.n_fake; ++r) {
    std::vector<NodeIndex> row = target_set;
    std::size_t remaining = free_slots;
    if (kind == HeuristicKind::kBandwagon) {
      std::vector<NodeIndex> pool = popular;
      const std::vector<NodeIndex> picked =
          DrawDistinct(pool, (free_slots + 1) / 2, rng);
      row.insert(row.end(), picked.begin(), picked.end());
      remaining -= picked.size();
    }
    std::vector<NodeIndex> pool;
    std::vector<NodeIndex> sorted_row = row;
    std::sort(sorted_row.begin(), sorted_row.end());
    for (std::size_t i = 0; i < dataset.n_items(); ++i) {
      const auto item = static_cast<NodeIndex>(i);
      if (!std::binary_search(sorted_row.begin(), sorted_row.end(), item)) {
        pool.push_back(item);
      }
    }
    const std::vector<NodeIndex> picked = DrawDistinct(pool, remaining, rng);
    row.insert(row.end(), picked.begin(), picked.end());
    std::sort(row.begin(), row.end());
    fake.rows.push_back(std::move(row));
  }
  return fake;
}

double AdversarialLoss(const EmbeddingTable& embeddings,
                       const InteractionDataset& dataset,
                       const TargetSpec& targets) {
  RequireShapedFor(embeddings, dataset);
  return AccumulateAdversarial(embeddings, dataset, targets.items, 1.0,
                               nullptr);
}

GradientBuffer AdversarialGradient(const EmbeddingTable& embeddings,
                                   const InteractionDataset& dataset,
                                   const TargetSpec& targets) {
  RequireShapedFor(embeddings, dataset);
  GradientBuffer grad = GradientBuffer::ZerosLike(embeddings);
  AccumulateAdversarial(embeddings, dataset, targets.items, 1.0, &grad);
  return grad;
}

EmbeddingTable PretrainSurrogate(const InteractionDataset& dataset,
                                 const SurrogateConfig& config) {
  if (dataset.fake_user_count() != 0) {
    throw Error(ErrorKind::kArgument,
                "pretraining uses real interactions only");
  }
  config.train.Validate();
  return TrainFromScratch(dataset, config.train);
}

InteractionDataset SampledRetrainSet(const InteractionDataset& dataset,
                                     const FakeInteractions& fake,
                                     double sample_ratio, std::uint64_t seed) {
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) {
    throw Error(ErrorKind::kArgument, "sample_ratio must lie in (0, 1]");
  }
  if (dataset.fake_user_count() != 0) {
    throw Error(ErrorKind::kArgument, "dataset already contains fake users");
  }
  const std::vector<InteractionDataset::Edge> real = dataset.Edges();
  const auto want = static_cast<std::size_t>(
      std::floor(sample_ratio * static_cast<double>(real.size()) + 1e-9));
  Rng rng(DeriveSeed(seed, "sample-edges"));
  std::vector<NodeIndex> kept, dropped;
  for (std::size_t e = 0; e < real.size(); ++e) {
    (UniformUnit(rng) < sample_ratio ? kept : dropped)
        .push_back(static_cast<NodeIndex>(e));
  }
  if (kept.size() > want) {
    DrawDistinct(kept, kept.size() - want, rng);
    kept.erase(kept.begin(),
               kept.begin() + static_cast<long>(kept.size() - want));
  } else if (kept.size() < want) {
    const std::vector<NodeIndex> extra =
        DrawDistinct(dropped, want - kept.size(), rng);
    kept.insert(kept.end(), extra.begin(), extra.end());
  }
  std::vector<InteractionDataset::Edge> edges;
  edges.reserve(kept.size() + fake.nnz());
  for (NodeIndex e : kept) edges.push_back(real[static_cast<std::size_t>(e)]);
  const auto base = static_cast<NodeIndex>(dataset.real_user_count());
  for (std::size_t r = 0; r < fake.rows.size(); ++r) {
    for (NodeIndex i : fake.rows[r]) {
      edges.emplace_back(base + static_cast<NodeIndex>(r), i);
    }
  }
  return InteractionDataset::FromEdges(
      dataset.real_user_count() + fake.n_fake(), dataset.n_items(), edges,
      dataset.real_user_count(), dataset.id_maps());
}

FakeInteractions Dpa2dlGpAttack(const InteractionDataset& dataset,
                                const TargetSpec& targets,
                                const AttackBudget& budget,
                                const SurrogateConfig& config,
                                const std::optional<GpConfig>& gp,
                                std::uint64_t seed,
                                const std::optional<EmbeddingTable>& pretrained,
                                AttackTrace* trace) {
  config.Validate();
  if (gp) gp->Validate();
  targets.Validate(dataset.n_items());
  CheckBudget(budget, targets, dataset.n_items());
  if (dataset.fake_user_count() != 0) {
    throw Error(ErrorKind::kArgument, "dataset already contains fake users");
  }
  const std::size_t n_real = dataset.real_user_count();
  const std::size_t m = dataset.n_items();

  std::optional<EmbeddingTable> base;
  if (config.pretrain) {
    base = pretrained ? *pretrained : PretrainSurrogate(dataset, config);
  }
  if (base && (base->n_users() != n_real || base->n_items() != m ||
               base->dim() != config.train.dim)) {
    throw Error(ErrorKind::kArgument,
                "pretrained surrogate does not match the dataset");
  }

  const std::vector<NodeIndex> target_set = SortedTargets(targets);
  const std::size_t free_slots = budget.tau - target_set.size();
  FakeInteractions fake;
  fake.budget = budget.tau;

  for (std::size_t f = 0; f < budget.n_fake; ++f) {
    const auto started = std::chrono::steady_clock::now();
    fake.rows.push_back(target_set);
    const InteractionDataset poisoned = InjectFake(dataset, fake);
    std::optional<InteractionDataset> sampled;
    if (config.sample_ratio > 0.0) {
      sampled = SampledRetrainSet(dataset, fake, config.sample_ratio,
                                  DeriveSeed(seed, "sample", f));
    }
    const InteractionDataset& train_set = sampled ? *sampled : poisoned;

    TrainConfig train = config.train;
    train.seed = DeriveSeed(seed, "surrogate", f);
    EmbeddingTable surrogate =
        base ? ExtendPretrained(*base, f + 1, train.seed)
            : InitEmbeddings(n_real + f + 1, m, train.dim, train.seed);

    TrainHooks hooks;
    if (gp) hooks.gp = &*gp;
    if (sampled) hooks.gp_graph = &poisoned;
    std::size_t gp_applications = 0;
    const auto count_gp = [&](int, const EpochStats& s) {
      gp_applications += s.gp_applications;
    };
    try {
      Train(surrogate, train_set, train, hooks, config.retrain_epochs, 0,
            count_gp);
      const double weight = config.adv_weight;
      hooks.auxiliary = [&](const EmbeddingTable& r, double scale,
                            GradientBuffer& g) {
        return AccumulateAdversarial(r, poisoned, target_set, weight * scale,
                                     &g);
      };
      Train(surrogate, train_set, train, hooks, config.adv_epochs,
            config.retrain_epochs, count_gp);
    } catch (const Error& e) {
      throw Error(ErrorKind::kAttack,
                  "fake user " + std::to_string(f) + ": " + e.what());
    }

    const auto fake_user = static_cast<NodeIndex>(n_real + f);
    const Eigen::VectorXd scores =
        surrogate.Items() * surrogate.User(fake_user).transpose();
    std::vector<NodeIndex> candidates;
    for (std::size_t i = 0; i < m; ++i) {
      const auto item = static_cast<NodeIndex>(i);
      if (!std::binary_search(target_set.begin(), target_set.end(), item)) {
        candidates.push_back(item);
      }
    }
    std::partial_sort(candidates.begin(),
                      candidates.begin() + static_cast<long>(free_slots),
                      candidates.end(), [&](NodeIndex a, NodeIndex b) {
                        if (scores(a) != scores(b)) return scores(a) > scores(b);
                        return a < b;
                      });
    std::vector<NodeIndex> row = target_set;
    row.insert(row.end(), candidates.begin(),
               candidates.begin() + static_cast<long>(free_slots));
    std::sort(row.begin(), row.end());
    fake.rows.back() = std::move(row);

    if (trace != nullptr) {
      trace->retrain_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        started)
              .count());
      trace->gp_applications += gp_applications;
    }
  }
  return fake;
}

}  // namespace gpatk

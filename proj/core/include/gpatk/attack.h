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

#ifndef GPATK_ATTACK_H_
#define GPATK_ATTACK_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/embedding.h"
#include "gpatk/gpengine.h"
#include "gpatk/recmodel.h"

namespace gpatk {

struct AttackBudget {
  std::size_t n_fake = 1;
  std::size_t tau = 1;
};

// n_fake = ceil(0.01 * n_real), tau = round(mean real-user degree).
AttackBudget DefaultBudget(const InteractionDataset& dataset);

struct TargetSpec {
  std::vector<NodeIndex> items;

  // Throws kArgument when empty, duplicated or out of range.
  void Validate(std::size_t n_items) const;
};

struct SurrogateConfig {
  TrainConfig train;
  // Epochs of the recommendation-loss phase per fake user.
  int retrain_epochs = 1;
  // Epochs of the recommendation + adversarial phase per fake user.
  int adv_epochs = 1;
  double adv_weight = 1.0;
  bool pretrain = false;
  // Fraction of real edges kept in each retraining set; 0 disables sampling.
  double sample_ratio = 0.0;

  void Validate() const;
};

enum class HeuristicKind { kRandom, kBandwagon };

// Every fake user gets all targets; the remaining tau - |targets| slots are
// uniform non-target items (random) or half drawn from the top 10% most
// popular items and half uniform (bandwagon).
FakeInteractions HeuristicAttack(HeuristicKind kind,
                                 const InteractionDataset& dataset,
                                 const TargetSpec& targets,
                                 const AttackBudget& budget,
                                 std::uint64_t seed);

// The ceil(0.1 * m) most interacted items, ties by index.
std::vector<NodeIndex> PopularItems(const InteractionDataset& dataset,
                                    double fraction = 0.1);

// Promotion loss: sum over real users u and targets t with (u, t) not
// interacted of softplus(-r_u.r_t).
double AdversarialLoss(const EmbeddingTable& embeddings,
                       const InteractionDataset& dataset,
                       const TargetSpec& targets);
GradientBuffer AdversarialGradient(const EmbeddingTable& embeddings,
                                   const InteractionDataset& dataset,
                                   const TargetSpec& targets);

// Trains a surrogate on the real interactions only, for scfg.train.epochs.
EmbeddingTable PretrainSurrogate(const InteractionDataset& dataset,
                                 const SurrogateConfig& config);

// Real edges sampled to exactly floor(ratio * nnz_real), plus every fake edge.
InteractionDataset SampledRetrainSet(const InteractionDataset& dataset,
                                     const FakeInteractions& fake,
                                     double sample_ratio, std::uint64_t seed);

struct AttackTrace {
  // Per fake user: seconds spent retraining the surrogate.
  std::vector<double> retrain_seconds;
  std::size_t gp_applications = 0;
};

// Generates fake users one at a time: seed the row with the targets,
// (re)initialize the surrogate, train on the poisoned data with the
// recommendation loss (+GP), then with recommendation + adversarial loss
// (GP on the recommendation part), and fill the row with the targets plus
// the best-scoring other items.
FakeInteractions Dpa2dlGpAttack(
    const InteractionDataset& dataset, const TargetSpec& targets,
    const AttackBudget& budget, const SurrogateConfig& config,
    const std::optional<GpConfig>& gp, std::uint64_t seed,
    const std::optional<EmbeddingTable>& pretrained = std::nullopt,
    AttackTrace* trace = nullptr);

}  // namespace gpatk

#endif  // GPATK_ATTACK_H_

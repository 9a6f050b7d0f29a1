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

#ifndef GPATK_RECMODEL_H_
#define GPATK_RECMODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/embedding.h"
#include "gpatk/gpengine.h"

namespace gpatk {

enum class LossKind { kBce, kBpr };
enum class NegativeMode { kSampled, kAll };

struct TrainConfig {
  LossKind loss = LossKind::kBce;
  double lr = 0.05;
  double l2 = 0.0;
  int epochs = 1;
  // Positive edges per iteration; 0 means the whole dataset.
  std::size_t batch_size = 0;
  double neg_weight = 1.0;
  int negs_per_pos = 1;
  // kAll uses every non-interacted pair (full batch only).
  NegativeMode negatives = NegativeMode::kSampled;
  std::size_t dim = 16;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Entries i.i.d. N(0, 0.01^2).
EmbeddingTable InitEmbeddings(std::size_t n_users, std::size_t n_items,
                              std::size_t dim, std::uint64_t seed);

struct NegativeSampling {
  NegativeMode mode = NegativeMode::kAll;
  int negs_per_pos = 1;
  std::uint64_t seed = 0;

  static NegativeSampling All() { return {}; }
  static NegativeSampling Sampled(int negs_per_pos, std::uint64_t seed) {
    return {NegativeMode::kSampled, negs_per_pos, seed};
  }
};

// sum_{(u,i) in Omega} softplus(-r_u.r_i) + beta * sum_{negatives}
// softplus(r_u.r_i).
double BceLoss(const EmbeddingTable& embeddings,
               const InteractionDataset& dataset, double neg_weight,
               const NegativeSampling& negatives = NegativeSampling::All());

// Gradient of the all-negatives BCE loss, evaluated pair by pair.
GradientBuffer AnalyticBceGradient(const EmbeddingTable& embeddings,
                                   const InteractionDataset& dataset,
                                   double neg_weight);

// softplus(-(r_u.r_pos - r_u.r_neg)).
double BprTripleLoss(const EmbeddingTable& embeddings, NodeIndex user,
                     NodeIndex positive, NodeIndex negative);
GradientBuffer BprTripleGradient(const EmbeddingTable& embeddings,
                                 NodeIndex user, NodeIndex positive,
                                 NodeIndex negative);

struct EpochStats {
  double mean_loss = 0.0;
  double seconds = 0.0;
  std::size_t iterations = 0;
  std::size_t gp_applications = 0;
};

// Extra loss terms added after gradient passing. `scale` is the fraction of
// positive edges in the current batch, so one epoch applies the term with
// total weight one. Returns the scaled loss and adds its gradient.
using AuxiliaryLoss = std::function<double(
    const EmbeddingTable& embeddings, double scale, GradientBuffer& gradient)>;

struct TrainHooks {
  const GpConfig* gp = nullptr;
  // Graph used for gradient passing; defaults to the training dataset.
  const InteractionDataset* gp_graph = nullptr;
  AuxiliaryLoss auxiliary;
  // When set, receives the sum of the recommendation-loss batch gradients
  // (before gradient passing) over the epoch.
  GradientBuffer* gradient_sum = nullptr;
};

// One BCE epoch of minibatch SGD. Positive edges are shuffled, each gets
// negs_per_pos uniformly drawn non-interacted items, the batch gradient is
// optionally passed through GP, and R <- R - lr * (G + l2 * R).
EpochStats TrainEpoch(EmbeddingTable& embeddings,
                      const InteractionDataset& dataset,
                      const TrainConfig& config, std::uint64_t epoch_seed,
                      const TrainHooks& hooks = {});

EpochStats BprTrainEpoch(EmbeddingTable& embeddings,
                         const InteractionDataset& dataset,
                         const TrainConfig& config, std::uint64_t epoch_seed);

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// Runs `epochs` epochs (config.epochs when negative) dispatching on
// config.loss; epoch e uses DeriveSeed(config.seed, "epoch", e + offset).
std::vector<EpochStats> Train(EmbeddingTable& embeddings,
                              const InteractionDataset& dataset,
                              const TrainConfig& config,
                              const TrainHooks& hooks = {}, int epochs = -1,
                              int epoch_offset = 0,
                              const EpochCallback& on_epoch = {});

// Fresh initialization followed by Train.
EmbeddingTable TrainFromScratch(const InteractionDataset& dataset,
                                const TrainConfig& config,
                                const TrainHooks& hooks = {});

struct TopKList {
  NodeIndex user = 0;
  std::vector<NodeIndex> items;
  std::vector<double> scores;
};

// The k highest-scoring items the user has not interacted with; ties go to
// the lower item index. Throws kArgument when k exceeds the candidates.
TopKList TopK(const EmbeddingTable& embeddings,
              const InteractionDataset& dataset, NodeIndex user,
              std::size_t k);

// TopK for each listed user, parallel over users.
std::vector<TopKList> TopKForUsers(const EmbeddingTable& embeddings,
                                   const InteractionDataset& dataset,
                                   std::span<const NodeIndex> users,
                                   std::size_t k);

std::vector<NodeIndex> RealUsers(const InteractionDataset& dataset);

// Binary checkpoint: magic "GPATKEMB", u64 n, u64 m, u64 d, u32 layout tag,
// then (n+m)*d little-endian doubles, row-major.
void SaveCheckpoint(const EmbeddingTable& embeddings,
                    const std::filesystem::path& path);
EmbeddingTable LoadCheckpoint(const std::filesystem::path& path);

// Appends "epoch,loss,seconds" (header written when the file is new).
void AppendEpochLog(const std::filesystem::path& path, int epoch,
                    const EpochStats& stats);

}  // namespace gpatk

#endif  // GPATK_RECMODEL_H_

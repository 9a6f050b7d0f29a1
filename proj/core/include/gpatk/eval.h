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

#ifndef GPATK_EVAL_H_
#define GPATK_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpatk/attack.h"
#include "gpatk/data.h"
#include "gpatk/embedding.h"
#include "gpatk/recmodel.h"

namespace gpatk {

// |{u in real users not interacting with target : target in T_u[:k]}| over
// the number of such users. Throws kUndefinedMetric when there are none.
double HitRatio(std::span<const TopKList> topk,
                const InteractionDataset& dataset, NodeIndex target,
                std::size_t k);

// Mean over real users that have not interacted with every target of
// |T_u[:k] ∩ targets| / |targets \ I_u|.
double RecallAtK(std::span<const TopKList> topk,
                 const InteractionDataset& dataset, const TargetSpec& targets,
                 std::size_t k);

// Mean per-user intersection-over-union of two list collections covering
// the same users. Throws kArgument on mismatched user sets.
double JaccardTopKSimilarity(std::span<const TopKList> lists_a,
                             std::span<const TopKList> lists_b);

struct GradientCosineStats {
  double interacted_mean = 0.0;
  double interacted_std = 0.0;
  double random_mean = 0.0;
  double random_std = 0.0;
};

// Cosine similarity of per-node accumulated gradients over all interacted
// pairs versus the same number of seeded uniformly random non-interacted
// pairs. Zero-norm vectors count as cosine 0.
GradientCosineStats GradientPairCosine(const InteractionDataset& dataset,
                                       const GradientBuffer& accumulated,
                                       std::uint64_t seed);

// Uniform non-interacted (user, item) pairs, sampled with replacement.
std::vector<InteractionDataset::Edge> SampleRandomPairs(
    const InteractionDataset& dataset, std::size_t count, std::uint64_t seed);

GradientCosineStats GradientPairCosine(
    const InteractionDataset& dataset, const GradientBuffer& accumulated,
    std::span<const InteractionDataset::Edge> random_pairs);

struct VictimConfig {
  std::string tag;
  TrainConfig train;
};

struct MetricRecord {
  std::string victim;
  std::size_t target_set = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double hr_at_k = 0.0;
  double recall_at_k = 0.0;
};

struct MetricAggregate {
  std::string victim;
  std::size_t count = 0;
  double hr_mean = 0.0;
  double hr_std = 0.0;
  double recall_mean = 0.0;
  double recall_std = 0.0;
};

struct MetricsReport {
  std::vector<MetricRecord> records;
  std::vector<MetricAggregate> aggregates;
};

// Mean and sample standard deviation per victim, in first-seen victim order.
std::vector<MetricAggregate> AggregateRecords(
    std::span<const MetricRecord> records);

// Retrains every victim from scratch for each seed on the poisoned dataset
// and scores every target set. For multi-item sets hr_at_k averages the
// per-item hit ratios over items with a defined ratio.
MetricsReport EvaluateAttack(const InteractionDataset& poisoned,
                             std::span<const VictimConfig> victims,
                             std::span<const TargetSpec> target_sets,
                             std::size_t k,
                             std::span<const std::uint64_t> seeds);

// JSON with "records" and "aggregates"; CSV with columns
// victim,target_set,seed,hr,recall.
std::string MetricsReportJson(const MetricsReport& report,
                              const std::string& config_hash,
                              std::uint64_t seed);
std::string MetricsReportCsv(const MetricsReport& report);

struct GradientCosineRow {
  int epoch = 0;
  GradientCosineStats stats;
};
std::string GradientCosineCsv(std::span<const GradientCosineRow> rows);

void WriteTextFile(const std::filesystem::path& path,
                   const std::string& contents);

}  // namespace gpatk

#endif  // GPATK_EVAL_H_

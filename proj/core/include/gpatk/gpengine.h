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

#ifndef GPATK_GPENGINE_H_
#define GPATK_GPENGINE_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/embedding.h"

namespace gpatk {

// Gradient passing hyperparameters. Thresholds may be +/-infinity.
struct GpConfig {
  int layers = 2;
  double xi_odd = 0.0;
  double xi_even = -std::numeric_limits<double>::infinity();
  double alpha_odd = 1.0;
  double alpha_even = 10.0;
  double apply_probability = 1.0;

  // Throws kArgument when layers < 1 or apply_probability is outside [0, 1].
  void Validate() const;
};

// Largest n * m for which dense P^grad / A^grad may be materialized.
inline constexpr std::size_t kDefaultDenseLimit = std::size_t{1} << 22;

// Pairwise gradient coefficients: sigma(-r_u.r_i) on interacted pairs and
// -beta * sigma(r_u.r_i) elsewhere. Row-major n x m.
struct GradInteractionMatrix {
  Matrix entries;
};

GradInteractionMatrix BuildPGrad(const EmbeddingTable& embeddings,
                                 const InteractionDataset& dataset,
                                 double neg_weight,
                                 std::size_t dense_limit = kDefaultDenseLimit);

// The symmetric (n+m) x (n+m) extension [[0, P], [P^T, 0]].
Matrix AssembleAGrad(const GradInteractionMatrix& p_grad);

enum class MessagePassingMode {
  // Materializes A^grad and multiplies it with R.
  kDense,
  // Streams P^grad one user row at a time; never stores it.
  kFactored,
};

// Full-negative BCE gradient computed as -A^grad * R.
GradientBuffer GradientViaMessagePassing(
    const EmbeddingTable& embeddings, const InteractionDataset& dataset,
    double neg_weight, MessagePassingMode mode = MessagePassingMode::kDense,
    std::size_t dense_limit = kDefaultDenseLimit);

// Normalized gradient-passing adjacency restricted to the interacted pairs
// that satisfy the condition term. Stored as the user->item block with its
// transpose so that propagation in both directions is a row sweep.
class GpAdjacency {
 public:
  struct Entry {
    NodeIndex neighbor;
    double weight;
  };

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t edge_count() const { return by_user_.size(); }
  double threshold() const { return threshold_; }
  bool empty() const { return by_user_.empty(); }

  std::span<const Entry> UserEntries(NodeIndex u) const {
    return {by_user_.data() + user_offsets_[u],
            by_user_.data() + user_offsets_[u + 1]};
  }
  std::span<const Entry> ItemEntries(NodeIndex i) const {
    return {by_item_.data() + item_offsets_[i],
            by_item_.data() + item_offsets_[i + 1]};
  }
  // Degrees used for normalization: interaction counts in the full graph.
  std::span<const double> degrees() const { return degrees_; }

  // Y = A * X for an (n+m)-row X.
  void Propagate(const Matrix& x, Matrix& y) const;

  // Dense (n+m) x (n+m) form; small graphs and tests only.
  Matrix ToDense() const;

 private:
  friend GpAdjacency BuildGpAdjacency(const EmbeddingTable&,
                                      const GradientBuffer&,
                                      const InteractionDataset&, double);

  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  double threshold_ = 0.0;
  std::vector<std::int64_t> user_offsets_{0};
  std::vector<Entry> by_user_;
  std::vector<std::int64_t> item_offsets_{0};
  std::vector<Entry> by_item_;
  std::vector<double> degrees_;
};

// r_u.g_i + r_i.g_u; positive when the pair's similarity is decreasing.
double ConditionTerm(const EmbeddingTable& embeddings,
                     const GradientBuffer& gradient, NodeIndex user,
                     NodeIndex item);

GpAdjacency BuildGpAdjacency(const EmbeddingTable& embeddings,
                             const GradientBuffer& gradient,
                             const InteractionDataset& dataset, double xi);

struct GpAdjacencyPair {
  GpAdjacency odd;
  GpAdjacency even;
};

GpAdjacencyPair BuildGpAdjacencyPair(const EmbeddingTable& embeddings,
                                     const GradientBuffer& gradient,
                                     const InteractionDataset& dataset,
                                     const GpConfig& config);

// G + alpha_odd * sum_{k=1..l} A_odd^(2k-1) G + alpha_even * sum_{k=1..l}
// A_even^(2k) G with adjacencies fixed by the caller.
GradientBuffer ApplyGradientPassing(const GradientBuffer& gradient,
                                    const GpAdjacencyPair& adjacency,
                                    const GpConfig& config);

// Builds both adjacencies from (R, G) and applies them.
GradientBuffer ApplyGradientPassing(const GradientBuffer& gradient,
                                    const EmbeddingTable& embeddings,
                                    const InteractionDataset& dataset,
                                    const GpConfig& config);

struct TwoStepOracleOptions {
  double condition_bound = 1e8;
};

struct TwoStepOracleResult {
  double residual = 0.0;
  double condition_number = 0.0;
};

// One update with the exact gradient passing matrix
//   A^GP = 2 I + lr A_{t+1} + (A_{t+1} - A_t) A_t^{-1}
// compared against two plain full-batch SGD steps. Requires n == m and a
// well-conditioned A_t; throws kSingular otherwise.
TwoStepOracleResult ExactGpTwoStepOracle(const EmbeddingTable& embeddings,
                                         const InteractionDataset& dataset,
                                         double lr, double neg_weight,
                                         const TwoStepOracleOptions& options = {});

// Multiply-adds of one ApplyGradientPassing call: 2 * nnz * 2l * d per
// adjacency, two adjacencies.
std::uint64_t GpStepCost(std::size_t nnz, const GpConfig& config,
                         std::size_t dim);

}  // namespace gpatk

#endif  // GPATK_GPENGINE_H_

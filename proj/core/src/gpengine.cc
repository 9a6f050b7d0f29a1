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

#include "gpatk/gpengine.h"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "gpatk/error.h"
#include "math_util.h"

namespace gpatk {

using internal::Sigmoid;

void GpConfig::Validate() const {
  if (layers < 1) throw Error(ErrorKind::kArgument, "gp layers must be >= 1");
  if (!(apply_probability >= 0.0 && apply_probability <= 1.0)) {
    throw Error(ErrorKind::kArgument,
                "gp apply_probability must lie in [0, 1]");
  }
  if (!(alpha_odd >= 0.0) || !(alpha_even >= 0.0)) {
    throw Error(ErrorKind::kArgument, "gp weights must be nonnegative");
  }
  if (std::isnan(xi_odd) || std::isnan(xi_even)) {
    throw Error(ErrorKind::kArgument, "gp thresholds must not be NaN");
  }
}

GradInteractionMatrix BuildPGrad(const EmbeddingTable& embeddings,
                                 const InteractionDataset& dataset,
                                 double neg_weight, std::size_t dense_limit) {
  RequireShapedFor(embeddings, dataset);
  const std::size_t n = dataset.n_users();
  const std::size_t m = dataset.n_items();
  if (m != 0 && n > dense_limit / m) {
    throw Error(ErrorKind::kCapacity,
                std::to_string(n) + "x" + std::to_string(m) +
                    " exceeds the dense limit of " +
                    std::to_string(dense_limit) + " entries");
  }
  GradInteractionMatrix p{Matrix(static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(m))};
  const Matrix scores = embeddings.Users() * embeddings.Items().transpose();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t j = 0; j < m; ++j) {
      const double s = scores(static_cast<Eigen::Index>(u),
                              static_cast<Eigen::Index>(j));
      p.entries(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)) =
          -neg_weight * Sigmoid(s);
    }
    for (NodeIndex j : dataset.UserItems(static_cast<NodeIndex>(u))) {
      p.entries(static_cast<Eigen::Index>(u), j) =
          Sigmoid(-scores(static_cast<Eigen::Index>(u), j));
    }
  }
  return p;
}

Matrix AssembleAGrad(const GradInteractionMatrix& p_grad) {
  const Eigen::Index n = p_grad.entries.rows();
  const Eigen::Index m = p_grad.entries.cols();
  Matrix a = Matrix::Zero(n + m, n + m);
  a.topRightCorner(n, m) = p_grad.entries;
  a.bottomLeftCorner(m, n) = p_grad.entries.transpose();
  return a;
}

GradientBuffer GradientViaMessagePassing(const EmbeddingTable& embeddings,
                                         const InteractionDataset& dataset,
                                         double neg_weight,
                                         MessagePassingMode mode,
                                         std::size_t dense_limit) {
  RequireShapedFor(embeddings, dataset);
  if (mode == MessagePassingMode::kDense) {
    const Matrix a =
        AssembleAGrad(BuildPGrad(embeddings, dataset, neg_weight, dense_limit));
    return GradientBuffer(dataset.n_users(), dataset.n_items(),
                          Matrix(-(a * embeddings.values())));
  }

  // One row of P^grad at a time: user u receives -P_u * R_items and each
  // item j receives -P_uj * r_u.
  GradientBuffer grad = GradientBuffer::ZerosLike(embeddings);
  const std::size_t m = dataset.n_items();
  Eigen::VectorXd p_row(static_cast<Eigen::Index>(m));
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    const auto user = static_cast<NodeIndex>(u);
    p_row.noalias() = embeddings.Items() * embeddings.User(user).transpose();
    for (Eigen::Index j = 0; j < p_row.size(); ++j) {
      p_row(j) = -neg_weight * Sigmoid(p_row(j));
    }
    for (NodeIndex j : dataset.UserItems(user)) {
      p_row(j) = Sigmoid(-embeddings.User(user).dot(embeddings.Item(j)));
    }
    grad.User(user).noalias() -= p_row.transpose() * embeddings.Items();
    grad.Items().noalias() -= p_row * embeddings.User(user);
  }
  return grad;
}

double ConditionTerm(const EmbeddingTable& embeddings,
                     const GradientBuffer& gradient, NodeIndex user,
                     NodeIndex item) {
  return embeddings.User(user).dot(gradient.Item(item)) +
         embeddings.Item(item).dot(gradient.User(user));
}

GpAdjacency BuildGpAdjacency(const EmbeddingTable& embeddings,
                             const GradientBuffer& gradient,
                             const InteractionDataset& dataset, double xi) {
  RequireShapedFor(embeddings, dataset);
  if (gradient.n_users() != embeddings.n_users() ||
      gradient.n_items() != embeddings.n_items() ||
      gradient.dim() != embeddings.dim()) {
    throw Error(ErrorKind::kArgument,
                "gradient buffer shape differs from the embedding table");
  }
  const std::size_t n = dataset.n_users();
  const std::size_t m = dataset.n_items();
  GpAdjacency adj;
  adj.n_users_ = n;
  adj.n_items_ = m;
  adj.threshold_ = xi;
  adj.degrees_.resize(n + m);
  for (std::size_t u = 0; u < n; ++u) {
    adj.degrees_[u] =
        static_cast<double>(dataset.UserDegree(static_cast<NodeIndex>(u)));
  }
  for (std::size_t i = 0; i < m; ++i) {
    adj.degrees_[n + i] =
        static_cast<double>(dataset.ItemDegree(static_cast<NodeIndex>(i)));
  }

  adj.user_offsets_.assign(n + 1, 0);
  adj.item_offsets_.assign(m + 1, 0);
  std::vector<NodeIndex> edge_users;
  for (std::size_t u = 0; u < n; ++u) {
    const auto user = static_cast<NodeIndex>(u);
    for (NodeIndex i : dataset.UserItems(user)) {
      if (!(ConditionTerm(embeddings, gradient, user, i) > xi)) continue;
      const double w = 1.0 / std::sqrt(adj.degrees_[u] * adj.degrees_[n + i]);
      adj.by_user_.push_back({i, w});
      edge_users.push_back(user);
      ++adj.item_offsets_[i + 1];
    }
    adj.user_offsets_[u + 1] = static_cast<std::int64_t>(adj.by_user_.size());
  }
  for (std::size_t i = 0; i < m; ++i) {
    adj.item_offsets_[i + 1] += adj.item_offsets_[i];
  }
  adj.by_item_.resize(adj.by_user_.size());
  std::vector<std::int64_t> cursor(adj.item_offsets_.begin(),
                                   adj.item_offsets_.end() - 1);
  for (std::size_t e = 0; e < adj.by_user_.size(); ++e) {
    const auto& entry = adj.by_user_[e];
    adj.by_item_[cursor[entry.neighbor]++] = {edge_users[e], entry.weight};
  }
  return adj;
}

void GpAdjacency::Propagate(const Matrix& x, Matrix& y) const {
  const auto n = static_cast<Eigen::Index>(n_users_);
  y.setZero(x.rows(), x.cols());
  for (std::size_t u = 0; u < n_users_; ++u) {
    auto dst = y.row(static_cast<Eigen::Index>(u));
    for (const Entry& e : UserEntries(static_cast<NodeIndex>(u))) {
      dst.noalias() += e.weight * x.row(n + e.neighbor);
    }
  }
  for (std::size_t i = 0; i < n_items_; ++i) {
    auto dst = y.row(n + static_cast<Eigen::Index>(i));
    for (const Entry& e : ItemEntries(static_cast<NodeIndex>(i))) {
      dst.noalias() += e.weight * x.row(e.neighbor);
    }
  }
}

Matrix GpAdjacency::ToDense() const {
  const auto n = static_cast<Eigen::Index>(n_users_);
  const auto size = static_cast<Eigen::Index>(n_users_ + n_items_);
  Matrix a = Matrix::Zero(size, size);
  for (std::size_t u = 0; u < n_users_; ++u) {
    for (const Entry& e : UserEntries(static_cast<NodeIndex>(u))) {
      a(static_cast<Eigen::Index>(u), n + e.neighbor) = e.weight;
    }
  }
  for (std::size_t i = 0; i < n_items_; ++i) {
    for (const Entry& e : ItemEntries(static_cast<NodeIndex>(i))) {
      a(n + static_cast<Eigen::Index>(i), e.neighbor) = e.weight;
    }
  }
  return a;
}

GpAdjacencyPair BuildGpAdjacencyPair(const EmbeddingTable& embeddings,
                                     const GradientBuffer& gradient,
                                     const InteractionDataset& dataset,
                                     const GpConfig& config) {
  return {BuildGpAdjacency(embeddings, gradient, dataset, config.xi_odd),
          BuildGpAdjacency(embeddings, gradient, dataset, config.xi_even)};
}

namespace {

// Sum of the hop-`parity` terms among the first `hops` powers of A applied
// to x (parity 1: odd hops, parity 0: even hops).
Matrix CollectTerms(const GpAdjacency& adjacency, const Matrix& x, int hops,
                    int parity, const char* label) {
  Matrix acc = Matrix::Zero(x.rows(), x.cols());
  Matrix current = x;
  Matrix next;
  for (int hop = 1; hop <= hops; ++hop) {
    adjacency.Propagate(current, next);
    if (!next.allFinite()) {
      throw Error(ErrorKind::kNumeric, std::string("non-finite ") + label +
                                           " propagation at layer " +
                                           std::to_string(hop));
    }
    if (hop % 2 == parity) acc += next;
    current.swap(next);
  }
  return acc;
}

}  // namespace

GradientBuffer ApplyGradientPassing(const GradientBuffer& gradient,
                                    const GpAdjacencyPair& adjacency,
                                    const GpConfig& config) {
  config.Validate();
  if (!gradient.AllFinite()) {
    throw Error(ErrorKind::kNumeric, "gradient passing input is not finite");
  }
  GradientBuffer out = gradient;
  const int l = config.layers;
  if (config.alpha_odd != 0.0 && !adjacency.odd.empty()) {
    out.values() += config.alpha_odd *
                    CollectTerms(adjacency.odd, gradient.values(), 2 * l - 1,
                                 1, "odd");
  }
  if (config.alpha_even != 0.0 && !adjacency.even.empty()) {
    out.values() += config.alpha_even *
                    CollectTerms(adjacency.even, gradient.values(), 2 * l, 0,
                                 "even");
  }
  if (!out.AllFinite()) {
    throw Error(ErrorKind::kNumeric, "gradient passing output is not finite");
  }
  return out;
}

GradientBuffer ApplyGradientPassing(const GradientBuffer& gradient,
                                    const EmbeddingTable& embeddings,
                                    const InteractionDataset& dataset,
                                    const GpConfig& config) {
  config.Validate();
  if (config.alpha_odd == 0.0 && config.alpha_even == 0.0) return gradient;
  GpAdjacencyPair adjacency;
  if (config.alpha_odd != 0.0) {
    adjacency.odd =
        BuildGpAdjacency(embeddings, gradient, dataset, config.xi_odd);
  }
  if (config.alpha_even != 0.0) {
    adjacency.even =
        BuildGpAdjacency(embeddings, gradient, dataset, config.xi_even);
  }
  return ApplyGradientPassing(gradient, adjacency, config);
}

TwoStepOracleResult ExactGpTwoStepOracle(const EmbeddingTable& embeddings,
                                         const InteractionDataset& dataset,
                                         double lr, double neg_weight,
                                         const TwoStepOracleOptions& options) {
  RequireShapedFor(embeddings, dataset);
  if (dataset.n_users() != dataset.n_items()) {
    throw Error(ErrorKind::kArgument,
                "the exact two-step identity needs n_users == n_items");
  }
  const Matrix& r0 = embeddings.values();
  const Matrix a0 = AssembleAGrad(BuildPGrad(embeddings, dataset, neg_weight));

  TwoStepOracleResult result;
  const Eigen::JacobiSVD<Matrix> svd(a0);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  result.condition_number =
      smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  if (!(result.condition_number <= options.condition_bound)) {
    throw Error(ErrorKind::kSingular,
                "A^grad has condition number " +
                    std::to_string(result.condition_number));
  }

  const Matrix grad0 = -a0 * r0;
  const Matrix r1 = r0 - lr * grad0;
  const EmbeddingTable table1(dataset.n_users(), dataset.n_items(), r1);
  const Matrix a1 = AssembleAGrad(BuildPGrad(table1, dataset, neg_weight));
  const Matrix grad1 = -a1 * r1;
  const Matrix r2 = r1 - lr * grad1;

  const Matrix a0_inv = a0.partialPivLu().inverse();
  const Matrix identity = Matrix::Identity(a0.rows(), a0.cols());
  const Matrix a_gp = 2.0 * identity + lr * a1 + (a1 - a0) * a0_inv;
  const Matrix one_step = r0 - lr * a_gp * grad0;
  result.residual = (one_step - r2).norm();
  return result;
}

std::uint64_t GpStepCost(std::size_t nnz, const GpConfig& config,
                         std::size_t dim) {
  constexpr std::uint64_t kMatrices = 2;
  return 2 * static_cast<std::uint64_t>(nnz) *
         (2 * static_cast<std::uint64_t>(config.layers)) *
         static_cast<std::uint64_t>(dim) * kMatrices;
}

}  // namespace gpatk

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

#include "gpatk/recmodel.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "gpatk/error.h"
#include "gpatk/parallel.h"
#include "gpatk/random.h"
#include "math_util.h"

namespace gpatk {

using internal::Sigmoid;
using internal::Softplus;

namespace {

// Uniformly drawn item the user has not interacted with; nullopt when the
// user has interacted with every item.
std::optional<NodeIndex> SampleNegative(const InteractionDataset& dataset,
                                        NodeIndex user, Rng& rng) {
  if (dataset.UserDegree(user) >= dataset.n_items()) return std::nullopt;
  while (true) {
    const auto j = static_cast<NodeIndex>(UniformIndex(rng, dataset.n_items()));
    if (!dataset.HasInteraction(user, j)) return j;
  }
}

template <class T>
void Shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t k = values.size(); k > 1; --k) {
    std::swap(values[k - 1], values[UniformIndex(rng, k)]);
  }
}

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// Applies GP and auxiliary terms, checks the loss and takes the SGD step.
void FinishIteration(EmbeddingTable& embeddings, GradientBuffer& gradient,
                     double& batch_loss, std::size_t iteration,
                     double batch_fraction, const TrainConfig& config,
                     const InteractionDataset& dataset,
                     const TrainHooks& hooks, Rng& gp_rng,
                     EpochStats& stats) {
  if (hooks.gradient_sum != nullptr) {
    hooks.gradient_sum->values() += gradient.values();
  }
  if (hooks.gp != nullptr) {
    const bool fire = UniformUnit(gp_rng) < hooks.gp->apply_probability;
    if (fire) {
      const InteractionDataset& graph =
          hooks.gp_graph != nullptr ? *hooks.gp_graph : dataset;
      gradient = ApplyGradientPassing(gradient, embeddings, graph, *hooks.gp);
      ++stats.gp_applications;
    }
  }
  if (hooks.auxiliary) {
    batch_loss += hooks.auxiliary(embeddings, batch_fraction, gradient);
  }
  if (!std::isfinite(batch_loss) || !gradient.AllFinite()) {
    throw Error(ErrorKind::kDivergence,
                "non-finite loss at iteration " + std::to_string(iteration));
  }
  if (config.l2 != 0.0) {
    embeddings.values() -=
        config.lr * (gradient.values() + config.l2 * embeddings.values());
  } else {
    embeddings.values() -= config.lr * gradient.values();
  }
}

void CheckHooks(const TrainHooks& hooks, const EmbeddingTable& embeddings) {
  if (hooks.gp != nullptr) hooks.gp->Validate();
  if (hooks.gp_graph != nullptr && !embeddings.ShapedFor(*hooks.gp_graph)) {
    throw Error(ErrorKind::kArgument,
                "gradient passing graph does not match the embedding table");
  }
  if (hooks.gradient_sum != nullptr &&
      (hooks.gradient_sum->rows() != embeddings.rows() ||
       hooks.gradient_sum->dim() != embeddings.dim())) {
    throw Error(ErrorKind::kArgument, "gradient_sum has the wrong shape");
  }
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw Error(ErrorKind::kArgument, "lr must be a finite value >= 0");
  }
  if (!(l2 >= 0.0)) throw Error(ErrorKind::kArgument, "l2 must be >= 0");
  if (!(neg_weight > 0.0)) {
    throw Error(ErrorKind::kArgument, "neg_weight must be > 0");
  }
  if (negs_per_pos < 1) {
    throw Error(ErrorKind::kArgument, "negs_per_pos must be >= 1");
  }
  if (epochs < 0) throw Error(ErrorKind::kArgument, "epochs must be >= 0");
  if (dim < 1) throw Error(ErrorKind::kArgument, "dim must be >= 1");
}

EmbeddingTable InitEmbeddings(std::size_t n_users, std::size_t n_items,
                              std::size_t dim, std::uint64_t seed) {
  if (n_users == 0 || n_items == 0 || dim == 0) {
    throw Error(ErrorKind::kArgument, "embedding shape must be positive");
  }
  EmbeddingTable table(n_users, n_items, dim);
  Rng rng(DeriveSeed(seed, "init"));
  std::normal_distribution<double> normal(0.0, 0.01);
  double* data = table.values().data();
  for (Eigen::Index k = 0; k < table.values().size(); ++k) {
    data[k] = normal(rng);
  }
  return table;
}

double BceLoss(const EmbeddingTable& embeddings,
               const InteractionDataset& dataset, double neg_weight,
               const NegativeSampling& negatives) {
  RequireShapedFor(embeddings, dataset);
  double loss = 0.0;
  if (negatives.mode == NegativeMode::kAll) {
    for (std::size_t u = 0; u < dataset.n_users(); ++u) {
      const auto user = static_cast<NodeIndex>(u);
      const auto items = dataset.UserItems(user);
      std::size_t cursor = 0;
      for (std::size_t j = 0; j < dataset.n_items(); ++j) {
        const auto item = static_cast<NodeIndex>(j);
        const double s = embeddings.User(user).dot(embeddings.Item(item));
        if (cursor < items.size() && items[cursor] == item) {
          loss += Softplus(-s);
          ++cursor;
        } else {
          loss += neg_weight * Softplus(s);
        }
      }
    }
    return loss;
  }
  Rng rng(DeriveSeed(negatives.seed, "loss-negatives"));
  for (const auto& [u, i] : dataset.Edges()) {
    loss += Softplus(-embeddings.User(u).dot(embeddings.Item(i)));
    for (int k = 0; k < negatives.negs_per_pos; ++k) {
      if (const auto j = SampleNegative(dataset, u, rng)) {
        loss += neg_weight * Softplus(embeddings.User(u).dot(embeddings.Item(*j)));
      }
    }
  }
  return loss;
}

GradientBuffer AnalyticBceGradient(const EmbeddingTable& embeddings,
                                   const InteractionDataset& dataset,
                                   double neg_weight) {
  RequireShapedFor(embeddings, dataset);
  GradientBuffer grad = GradientBuffer::ZerosLike(embeddings);
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    const auto user = static_cast<NodeIndex>(u);
    const auto items = dataset.UserItems(user);
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < dataset.n_items(); ++j) {
      const auto item = static_cast<NodeIndex>(j);
      const double s = embeddings.User(user).dot(embeddings.Item(item));
      double coeff;
      if (cursor < items.size() && items[cursor] == item) {
        coeff = -Sigmoid(-s);
        ++cursor;
      } else {
        coeff = neg_weight * Sigmoid(s);
      }
      grad.User(user) += coeff * embeddings.Item(item);
      grad.Item(item) += coeff * embeddings.User(user);
    }
  }
  return grad;
}

double BprTripleLoss(const EmbeddingTable& embeddings, NodeIndex user,
                     NodeIndex positive, NodeIndex negative) {
  const double margin = embeddings.User(user).dot(embeddings.Item(positive)) -
                        embeddings.User(user).dot(embeddings.Item(negative));
  return Softplus(-margin);
}

GradientBuffer BprTripleGradient(const EmbeddingTable& embeddings,
                                 NodeIndex user, NodeIndex positive,
                                 NodeIndex negative) {
  GradientBuffer grad = GradientBuffer::ZerosLike(embeddings);
  const double margin = embeddings.User(user).dot(embeddings.Item(positive)) -
                        embeddings.User(user).dot(embeddings.Item(negative));
  const double coeff = -Sigmoid(-margin);
  grad.User(user) +=
      coeff * (embeddings.Item(positive) - embeddings.Item(negative));
  grad.Item(positive) += coeff * embeddings.User(user);
  grad.Item(negative) -= coeff * embeddings.User(user);
  return grad;
}

EpochStats TrainEpoch(EmbeddingTable& embeddings,
                      const InteractionDataset& dataset,
                      const TrainConfig& config, std::uint64_t epoch_seed,
                      const TrainHooks& hooks) {
  config.Validate();
  RequireShapedFor(embeddings, dataset);
  CheckHooks(hooks, embeddings);
  const Stopwatch watch;
  EpochStats stats;
  const std::size_t nnz = dataset.nnz();
  if (nnz == 0) return stats;

  Rng gp_rng(DeriveSeed(epoch_seed, "gp"));
  GradientBuffer grad = GradientBuffer::ZerosLike(embeddings);
  double total_loss = 0.0;

  if (config.negatives == NegativeMode::kAll) {
    if (config.batch_size != 0 && config.batch_size < nnz) {
      throw Error(ErrorKind::kArgument,
                  "all-negatives training requires a full batch");
    }
    grad = AnalyticBceGradient(embeddings, dataset, config.neg_weight);
    double loss = BceLoss(embeddings, dataset, config.neg_weight);
    FinishIteration(embeddings, grad, loss, 0, 1.0, config, dataset, hooks,
                    gp_rng, stats);
    stats.iterations = 1;
    stats.mean_loss = loss / static_cast<double>(nnz);
    stats.seconds = watch.Seconds();
    return stats;
  }

  std::vector<InteractionDataset::Edge> edges = dataset.Edges();
  Rng shuffle_rng(DeriveSeed(epoch_seed, "shuffle"));
  Shuffle(edges, shuffle_rng);
  Rng negative_rng(DeriveSeed(epoch_seed, "negatives"));
  const std::size_t batch =
      config.batch_size == 0 ? nnz : std::min(config.batch_size, nnz);

  for (std::size_t start = 0; start < nnz; start += batch) {
    const std::size_t end = std::min(nnz, start + batch);
    grad.values().setZero();
    double loss = 0.0;
    for (std::size_t e = start; e < end; ++e) {
      const auto [u, i] = edges[e];
      const double s = embeddings.User(u).dot(embeddings.Item(i));
      loss += Softplus(-s);
      const double pos_coeff = -Sigmoid(-s);
      grad.User(u) += pos_coeff * embeddings.Item(i);
      grad.Item(i) += pos_coeff * embeddings.User(u);
      for (int k = 0; k < config.negs_per_pos; ++k) {
        const auto j = SampleNegative(dataset, u, negative_rng);
        if (!j) break;
        const double t = embeddings.User(u).dot(embeddings.Item(*j));
        loss += config.neg_weight * Softplus(t);
        const double neg_coeff = config.neg_weight * Sigmoid(t);
        grad.User(u) += neg_coeff * embeddings.Item(*j);
        grad.Item(*j) += neg_coeff * embeddings.User(u);
      }
    }
    const double fraction =
        static_cast<double>(end - start) / static_cast<double>(nnz);
    FinishIteration(embeddings, grad, loss, stats.iterations, fraction, config,
                    dataset, hooks, gp_rng, stats);
    total_loss += loss;
    ++stats.iterations;
  }
  stats.mean_loss = total_loss / static_cast<double>(nnz);
  stats.seconds = watch.Seconds();
  return stats;
}

EpochStats BprTrainEpoch(EmbeddingTable& embeddings,
                         const InteractionDataset& dataset,
                         const TrainConfig& config, std::uint64_t epoch_seed) {
  config.Validate();
  RequireShapedFor(embeddings, dataset);
  const Stopwatch watch;
  EpochStats stats;
  const std::size_t nnz = dataset.nnz();
  if (nnz == 0) return stats;

  std::vector<InteractionDataset::Edge> edges = dataset.Edges();
  Rng shuffle_rng(DeriveSeed(epoch_seed, "shuffle"));
  Shuffle(edges, shuffle_rng);
  Rng negative_rng(DeriveSeed(epoch_seed, "negatives"));
  const std::size_t batch =
      config.batch_size == 0 ? nnz : std::min(config.batch_size, nnz);
  GradientBuffer grad = GradientBuffer::ZerosLike(embeddings);
  double total_loss = 0.0;
  for (std::size_t start = 0; start < nnz; start += batch) {
    const std::size_t end = std::min(nnz, start + batch);
    grad.values().setZero();
    double loss = 0.0;
    for (std::size_t e = start; e < end; ++e) {
      const auto [u, i] = edges[e];
      for (int k = 0; k < config.negs_per_pos; ++k) {
        const auto j = SampleNegative(dataset, u, negative_rng);
        if (!j) break;
        const double margin = embeddings.User(u).dot(embeddings.Item(i)) -
                              embeddings.User(u).dot(embeddings.Item(*j));
        loss += Softplus(-margin);
        const double coeff = -Sigmoid(-margin);
        grad.User(u) += coeff * (embeddings.Item(i) - embeddings.Item(*j));
        grad.Item(i) += coeff * embeddings.User(u);
        grad.Item(*j) -= coeff * embeddings.User(u);
      }
    }
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::kDivergence,
                  "non-finite loss at iteration " +
                      std::to_string(stats.iterations));
    }
    if (config.l2 != 0.0) {
      embeddings.values() -=
          config.lr * (grad.values() + config.l2 * embeddings.values());
    } else {
      embeddings.values() -= config.lr * grad.values();
    }
    total_loss += loss;
    ++stats.iterations;
  }
  stats.mean_loss = total_loss / static_cast<double>(nnz);
  stats.seconds = watch.Seconds();
  return stats;
}

std::vector<EpochStats> Train(EmbeddingTable& embeddings,
                              const InteractionDataset& dataset,
                              const TrainConfig& config,
                              const TrainHooks& hooks, int epochs,
                              int epoch_offset, const EpochCallback& on_epoch) {
  const int count = epochs < 0 ? config.epochs : epochs;
  if (config.loss == LossKind::kBpr &&
      (hooks.gp != nullptr || hooks.auxiliary || hooks.gradient_sum)) {
    throw Error(ErrorKind::kArgument, "BPR training takes no hooks");
  }
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int e = 0; e < count; ++e) {
    const std::uint64_t seed = DeriveSeed(
        config.seed, "epoch", static_cast<std::uint64_t>(e + epoch_offset));
    EpochStats stats =
        config.loss == LossKind::kBpr
            ? BprTrainEpoch(embeddings, dataset, config, seed)
            : TrainEpoch(embeddings, dataset, config, seed, hooks);
    if (on_epoch) on_epoch(e + epoch_offset, stats);
    history.push_back(stats);
  }
  return history;
}

EmbeddingTable TrainFromScratch(const InteractionDataset& dataset,
                                const TrainConfig& config,
                                const TrainHooks& hooks) {
  EmbeddingTable table = InitEmbeddings(dataset.n_users(), dataset.n_items(),
                                        config.dim, config.seed);
  Train(table, dataset, config, hooks);
  return table;
}

TopKList TopK(const EmbeddingTable& embeddings,
              const InteractionDataset& dataset, NodeIndex user,
              std::size_t k) {
  RequireShapedFor(embeddings, dataset);
  if (user < 0 || static_cast<std::size_t>(user) >= dataset.n_users()) {
    throw Error(ErrorKind::kBounds, "user " + std::to_string(user));
  }
  const auto seen = dataset.UserItems(user);
  const std::size_t candidates = dataset.n_items() - seen.size();
  if (k > candidates) {
    throw Error(ErrorKind::kArgument,
                "k=" + std::to_string(k) + " exceeds the " +
                    std::to_string(candidates) + " candidate items of user " +
                    std::to_string(user));
  }
  const Eigen::VectorXd scores =
      embeddings.Items() * embeddings.User(user).transpose();
  std::vector<NodeIndex> pool;
  pool.reserve(candidates);
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < dataset.n_items(); ++j) {
    const auto item = static_cast<NodeIndex>(j);
    if (cursor < seen.size() && seen[cursor] == item) {
      ++cursor;
      continue;
    }
    pool.push_back(item);
  }
  const auto better = [&scores](NodeIndex a, NodeIndex b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  };
  std::partial_sort(pool.begin(), pool.begin() + static_cast<long>(k),
                    pool.end(), better);
  TopKList list;
  list.user = user;
  list.items.assign(pool.begin(), pool.begin() + static_cast<long>(k));
  list.scores.reserve(k);
  for (NodeIndex item : list.items) list.scores.push_back(scores(item));
  return list;
}

std::vector<TopKList> TopKForUsers(const EmbeddingTable& embeddings,
                                   const InteractionDataset& dataset,
                                   std::span<const NodeIndex> users,
                                   std::size_t k) {
  std::vector<TopKList> lists(users.size());
  ParallelFor(users.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      lists[idx] = TopK(embeddings, dataset, users[idx], k);
    }
  });
  return lists;
}

std::vector<NodeIndex> RealUsers(const InteractionDataset& dataset) {
  std::vector<NodeIndex> users(dataset.real_user_count());
  std::iota(users.begin(), users.end(), 0);
  return users;
}

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'P', 'A', 'T', 'K', 'E', 'M', 'B'};
constexpr std::uint32_t kLayoutUsersThenItemsRowMajor = 1;

template <class T>
void WriteLittleEndian(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T ReadLittleEndian(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorKind::kFormat, "truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void SaveCheckpoint(const EmbeddingTable& embeddings,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  WriteLittleEndian<std::uint64_t>(out, embeddings.n_users());
  WriteLittleEndian<std::uint64_t>(out, embeddings.n_items());
  WriteLittleEndian<std::uint64_t>(out, embeddings.dim());
  WriteLittleEndian<std::uint32_t>(out, kLayoutUsersThenItemsRowMajor);
  const double* data = embeddings.values().data();
  for (Eigen::Index k = 0; k < embeddings.values().size(); ++k) {
    WriteLittleEndian<double>(out, data[k]);
  }
  if (!out) throw Error(ErrorKind::kIo, "write failure on " + path.string());
}

EmbeddingTable LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + " is not a checkpoint");
  }
  const auto n = ReadLittleEndian<std::uint64_t>(in);
  const auto m = ReadLittleEndian<std::uint64_t>(in);
  const auto d = ReadLittleEndian<std::uint64_t>(in);
  const auto layout = ReadLittleEndian<std::uint32_t>(in);
  if (layout != kLayoutUsersThenItemsRowMajor) {
    throw Error(ErrorKind::kFormat,
                "unknown checkpoint layout " + std::to_string(layout));
  }
  EmbeddingTable table(n, m, d);
  double* data = table.values().data();
  for (Eigen::Index k = 0; k < table.values().size(); ++k) {
    data[k] = ReadLittleEndian<double>(in);
  }
  return table;
}

void AppendEpochLog(const std::filesystem::path& path, int epoch,
                    const EpochStats& stats) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot append to " + path.string());
  if (fresh) out << "epoch,loss,seconds\n";
  char line[96];
  std::snprintf(line, sizeof(line), "%d,%.10g,%.6f\n", epoch, stats.mean_loss,
                stats.seconds);
  out << line;
}

}  // namespace gpatk

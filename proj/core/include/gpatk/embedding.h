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

#ifndef GPATK_EMBEDDING_H_
#define GPATK_EMBEDDING_H_

#include <Eigen/Core>
#include <cstddef>
#include <cstring>
#include <utility>

#include "gpatk/data.h"
#include "gpatk/error.h"

namespace gpatk {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A dense (n_users + n_items) x dim matrix whose first n_users rows belong to
// users and the remaining n_items rows to items. The tag keeps embeddings and
// gradients from being mixed up at call sites.
template <class Tag>
class NodeMatrix {
 public:
  NodeMatrix() = default;
  NodeMatrix(std::size_t n_users, std::size_t n_items, std::size_t dim)
      : n_users_(n_users),
        n_items_(n_items),
        values_(Matrix::Zero(static_cast<Eigen::Index>(n_users + n_items),
                             static_cast<Eigen::Index>(dim))) {}
  NodeMatrix(std::size_t n_users, std::size_t n_items, Matrix values)
      : n_users_(n_users), n_items_(n_items), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != n_users + n_items) {
      throw Error(ErrorKind::kArgument, "row count does not match n + m");
    }
  }

  template <class OtherTag>
  static NodeMatrix ZerosLike(const NodeMatrix<OtherTag>& other) {
    return NodeMatrix(other.n_users(), other.n_items(), other.dim());
  }

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  std::size_t rows() const { return n_users_ + n_items_; }

  Matrix& values() { return values_; }
  const Matrix& values() const { return values_; }

  auto User(NodeIndex u) { return values_.row(u); }
  auto User(NodeIndex u) const { return values_.row(u); }
  auto Item(NodeIndex i) {
    return values_.row(static_cast<Eigen::Index>(n_users_) + i);
  }
  auto Item(NodeIndex i) const {
    return values_.row(static_cast<Eigen::Index>(n_users_) + i);
  }
  auto Users() { return values_.topRows(static_cast<Eigen::Index>(n_users_)); }
  auto Users() const {
    return values_.topRows(static_cast<Eigen::Index>(n_users_));
  }
  auto Items() {
    return values_.bottomRows(static_cast<Eigen::Index>(n_items_));
  }
  auto Items() const {
    return values_.bottomRows(static_cast<Eigen::Index>(n_items_));
  }

  bool AllFinite() const { return values_.allFinite(); }

  bool ShapedFor(const InteractionDataset& dataset) const {
    return n_users_ == dataset.n_users() && n_items_ == dataset.n_items();
  }

  // Bitwise equality; distinguishes +0.0 from -0.0.
  friend bool operator==(const NodeMatrix& a, const NodeMatrix& b) {
    return a.n_users_ == b.n_users_ && a.n_items_ == b.n_items_ &&
           a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() &&
           std::memcmp(a.values_.data(), b.values_.data(),
                       sizeof(double) * static_cast<std::size_t>(
                                            a.values_.size())) == 0;
  }

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  Matrix values_;
};

struct EmbeddingTag {};
struct GradientTag {};

using EmbeddingTable = NodeMatrix<EmbeddingTag>;
using GradientBuffer = NodeMatrix<GradientTag>;

inline void RequireShapedFor(const EmbeddingTable& table,
                             const InteractionDataset& dataset) {
  if (!table.ShapedFor(dataset)) {
    throw Error(ErrorKind::kArgument,
                "embedding table is " + std::to_string(table.n_users()) + "x" +
                    std::to_string(table.n_items()) + " but dataset is " +
                    std::to_string(dataset.n_users()) + "x" +
                    std::to_string(dataset.n_items()));
  }
}

}  // namespace gpatk

#endif  // GPATK_EMBEDDING_H_

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

#ifndef GPATK_TESTS_TESTING_FIXTURES_H_
#define GPATK_TESTS_TESTING_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/embedding.h"
#include "testing/oracles.h"

namespace gpatk::testing {

inline EdgeList EdgesOf(const InteractionDataset& dataset) {
  EdgeList edges;
  for (const auto& [u, i] : dataset.Edges()) edges.emplace_back(u, i);
  return edges;
}

inline Dense DenseY(const InteractionDataset& dataset) {
  return InteractionMatrix(static_cast<int>(dataset.n_users()),
                           static_cast<int>(dataset.n_items()),
                           EdgesOf(dataset));
}

inline Dense UsersOf(const EmbeddingTable& r) {
  return Dense(r.Users());
}
inline Dense ItemsOf(const EmbeddingTable& r) {
  return Dense(r.Items());
}
inline Dense DenseOf(const Matrix& m) { return Dense(m); }

// Seeded Bernoulli edge set over n x m.
inline InteractionDataset RandomDataset(std::size_t n, std::size_t m,
                                        double density, std::uint64_t seed,
                                        std::size_t real_users = 0) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(density);
  std::vector<InteractionDataset::Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t i = 0; i < m; ++i) {
      if (coin(rng)) {
        edges.emplace_back(static_cast<NodeIndex>(u),
                           static_cast<NodeIndex>(i));
      }
    }
  }
  return InteractionDataset::FromEdges(n, m, edges,
                                       real_users == 0 ? n : real_users);
}

inline EmbeddingTable RandomTable(std::size_t n, std::size_t m,
                                  std::size_t d, std::uint64_t seed,
                                  double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-scale, scale);
  EmbeddingTable r(n, m, d);
  for (Eigen::Index k = 0; k < r.values().size(); ++k) {
    r.values().data()[k] = unif(rng);
  }
  return r;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gpatk_tests" /
                   name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gpatk::testing

#endif  // GPATK_TESTS_TESTING_FIXTURES_H_

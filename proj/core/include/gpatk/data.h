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

#ifndef GPATK_DATA_H_
#define GPATK_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gpatk {

using NodeIndex = std::int32_t;

struct InteractionTriple {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;

  friend bool operator==(const InteractionTriple&,
                         const InteractionTriple&) = default;
};

// kGowalla reads the raw SNAP check-in dump: user, ISO-8601 time, latitude,
// longitude, location id.
enum class TextFormat { kTsv, kCsv, kGowalla };

std::optional<TextFormat> ParseTextFormat(std::string_view name);

struct IngestOptions {
  TextFormat format = TextFormat::kTsv;
  // Yelp-style binarization: a numeric fourth column must exceed this value.
  std::optional<double> min_rating;
  // Tenrec-style binarization: a fourth column must equal this token.
  std::optional<std::string> event_type;
};

struct IngestResult {
  std::vector<InteractionTriple> triples;
  std::size_t malformed_count = 0;
  // Well-formed records rejected by the min_rating / event_type filters.
  std::size_t filtered_count = 0;
  bool had_header = false;
};

// Parses `user<sep>item<sep>timestamp[<sep>extra]` records. A first line
// whose timestamp field is not numeric is treated as a header. Throws
// kFormat when more than half of the data lines are malformed.
IngestResult IngestInteractions(std::istream& source,
                                const IngestOptions& options = {});
IngestResult IngestInteractionsFile(const std::filesystem::path& path,
                                    const IngestOptions& options = {});

// Collapses duplicate (user, item) pairs onto their first occurrence,
// carrying the earliest timestamp.
std::vector<InteractionTriple> DeduplicateTriples(
    std::span<const InteractionTriple> triples);

// Deduplicates, then repeatedly removes users and items with fewer than
// `min_interactions` edges until nothing changes. Input order is kept.
std::vector<InteractionTriple> KCoreFilter(
    std::span<const InteractionTriple> triples, int min_interactions);

// Token <-> dense index maps shared between datasets of one run.
class IdMaps {
 public:
  NodeIndex InternUser(const std::string& token);
  NodeIndex InternItem(const std::string& token);

  std::optional<NodeIndex> FindUser(const std::string& token) const;
  std::optional<NodeIndex> FindItem(const std::string& token) const;

  const std::string& UserToken(NodeIndex u) const { return user_tokens_[u]; }
  const std::string& ItemToken(NodeIndex i) const { return item_tokens_[i]; }
  std::size_t user_count() const { return user_tokens_.size(); }
  std::size_t item_count() const { return item_tokens_.size(); }

 private:
  std::vector<std::string> user_tokens_;
  std::vector<std::string> item_tokens_;
  std::unordered_map<std::string, NodeIndex> user_index_;
  std::unordered_map<std::string, NodeIndex> item_index_;
};

// Bipartite interaction graph in compressed row (by user) and column (by
// item) form. Immutable once built; fake users, if any, occupy the user
// indices [real_user_count, n_users).
class InteractionDataset {
 public:
  using Edge = std::pair<NodeIndex, NodeIndex>;

  InteractionDataset() = default;

  // Builds from (user, item) pairs. Duplicate pairs are dropped. Throws
  // kBounds on out-of-range indices.
  static InteractionDataset FromEdges(
      std::size_t n_users, std::size_t n_items, std::span<const Edge> edges,
      std::size_t real_user_count,
      std::shared_ptr<const IdMaps> id_maps = nullptr);

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t nnz() const { return user_items_.size(); }
  std::size_t real_user_count() const { return real_user_count_; }
  std::size_t fake_user_count() const { return n_users_ - real_user_count_; }

  std::span<const NodeIndex> UserItems(NodeIndex u) const {
    return {user_items_.data() + user_offsets_[u],
            user_items_.data() + user_offsets_[u + 1]};
  }
  std::span<const NodeIndex> ItemUsers(NodeIndex i) const {
    return {item_users_.data() + item_offsets_[i],
            item_users_.data() + item_offsets_[i + 1]};
  }
  std::size_t UserDegree(NodeIndex u) const {
    return static_cast<std::size_t>(user_offsets_[u + 1] - user_offsets_[u]);
  }
  std::size_t ItemDegree(NodeIndex i) const {
    return static_cast<std::size_t>(item_offsets_[i + 1] - item_offsets_[i]);
  }
  bool HasInteraction(NodeIndex u, NodeIndex i) const;

  // All edges in user-major order.
  std::vector<Edge> Edges() const;

  const std::shared_ptr<const IdMaps>& id_maps() const { return id_maps_; }

  // Re-checks every structural invariant; returns a description of the
  // first violation or nullopt.
  std::optional<std::string> CheckInvariants() const;

  friend bool operator==(const InteractionDataset& a,
                         const InteractionDataset& b) {
    return a.n_users_ == b.n_users_ && a.n_items_ == b.n_items_ &&
           a.real_user_count_ == b.real_user_count_ &&
           a.user_offsets_ == b.user_offsets_ &&
           a.user_items_ == b.user_items_ &&
           a.item_offsets_ == b.item_offsets_ &&
           a.item_users_ == b.item_users_;
  }

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::size_t real_user_count_ = 0;
  std::vector<std::int64_t> user_offsets_{0};
  std::vector<NodeIndex> user_items_;
  std::vector<std::int64_t> item_offsets_{0};
  std::vector<NodeIndex> item_users_;
  std::shared_ptr<const IdMaps> id_maps_;
};

// Assigns dense indices by first appearance of each token.
InteractionDataset BuildDataset(std::span<const InteractionTriple> triples);

struct SplitDataset {
  InteractionDataset train;
  InteractionDataset validation;
};

// Per user, the earliest ceil(train_ratio * |I_u|) interactions go to train
// and the rest to validation. Equal timestamps are ordered by item index.
SplitDataset ChronologicalSplit(std::span<const InteractionTriple> triples,
                                double train_ratio);

// Interactions of injected fake users. Row r belongs to the fake user with
// global index real_user_count + r.
struct FakeInteractions {
  std::size_t budget = 0;
  std::vector<std::vector<NodeIndex>> rows;

  std::size_t n_fake() const { return rows.size(); }
  std::size_t nnz() const;

  // Checks 1 <= |row| <= budget, sortedness, uniqueness, item range and
  // (when targets are given) inclusion of every target in every row.
  std::optional<std::string> CheckInvariants(
      std::size_t n_items, std::span<const NodeIndex> targets = {}) const;
};

InteractionDataset InjectFake(const InteractionDataset& dataset,
                              const FakeInteractions& fake);

// Desk-scale synthetic data: users and items are assigned round-robin to
// clusters; each user interacts with in-cluster items with probability
// `p_in` and other items with `p_out`. Every user and item receives at least
// one interaction. Timestamps are a random permutation.
struct ClusteredFixtureOptions {
  std::size_t n_users = 60;
  std::size_t n_items = 40;
  std::size_t n_clusters = 4;
  double p_in = 0.5;
  double p_out = 0.03;
  // Items with index >= n_items - cold_items get interaction probability
  // `p_cold` for everyone, producing unpopular target candidates.
  std::size_t cold_items = 0;
  double p_cold = 0.03;
  std::uint64_t seed = 1;
};

std::vector<InteractionTriple> GenerateClusteredInteractions(
    const ClusteredFixtureOptions& options);

// Persistence: `meta.json` plus `edges.tsv` (user_index, item_index), and
// `users.tsv` / `items.tsv` token tables when id maps are attached.
void SaveDataset(const InteractionDataset& dataset,
                 const std::filesystem::path& dir);
InteractionDataset LoadDataset(const std::filesystem::path& dir);

void SaveFakeInteractions(const FakeInteractions& fake,
                          const std::filesystem::path& path);
FakeInteractions LoadFakeInteractions(const std::filesystem::path& path,
                                      std::size_t budget);

}  // namespace gpatk

#endif  // GPATK_DATA_H_

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

#include "gpatk/data.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "gpatk/error.h"
#include "gpatk/random.h"

namespace gpatk {
namespace {

std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::int64_t> ParseInt(std::string_view s) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

std::optional<double> ParseDouble(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string copy(s);
  char* end = nullptr;
  const double value = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// "2010-10-19T23:55:27Z" -> seconds since the Unix epoch.
std::optional<std::int64_t> ParseIsoUtc(std::string_view s) {
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' ||
      s[13] != ':' || s[16] != ':' || s[19] != 'Z') {
    return std::nullopt;
  }
  const auto year = ParseInt(s.substr(0, 4));
  const auto month = ParseInt(s.substr(5, 2));
  const auto day = ParseInt(s.substr(8, 2));
  const auto hour = ParseInt(s.substr(11, 2));
  const auto minute = ParseInt(s.substr(14, 2));
  const auto second = ParseInt(s.substr(17, 2));
  if (!year || !month || !day || !hour || !minute || !second) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{
      std::chrono::year(static_cast<int>(*year)),
      std::chrono::month(static_cast<unsigned>(*month)),
      std::chrono::day(static_cast<unsigned>(*day))};
  if (!ymd.ok() || *hour > 23 || *minute > 59 || *second > 60) {
    return std::nullopt;
  }
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + *hour * 3600 +
         *minute * 60 + *second;
}

enum class LineStatus { kOk, kMalformed, kFiltered, kHeaderCandidate };

struct ParsedLine {
  LineStatus status = LineStatus::kMalformed;
  InteractionTriple triple;
};

ParsedLine ParseLine(std::string_view line, const IngestOptions& options) {
  ParsedLine out;
  const char sep = options.format == TextFormat::kCsv ? ',' : '\t';
  std::vector<std::string_view> fields = SplitFields(line, sep);
  for (auto& f : fields) f = Trim(f);

  std::string_view user, item, extra;
  std::optional<std::int64_t> timestamp;
  bool have_extra = false;
  if (options.format == TextFormat::kGowalla) {
    if (fields.size() < 5) return out;
    user = fields[0];
    item = fields[4];
    timestamp = ParseIsoUtc(fields[1]);
  } else {
    if (fields.size() < 3) return out;
    user = fields[0];
    item = fields[1];
    timestamp = ParseInt(fields[2]);
    if (fields.size() >= 4) {
      extra = fields[3];
      have_extra = true;
    }
  }
  if (user.empty() || item.empty()) return out;
  if (!timestamp) {
    out.status = LineStatus::kHeaderCandidate;
    return out;
  }
  if (*timestamp < 0) return out;

  if (options.min_rating) {
    if (!have_extra) return out;
    const auto rating = ParseDouble(extra);
    if (!rating) {
      out.status = LineStatus::kHeaderCandidate;
      return out;
    }
    if (*rating <= *options.min_rating) {
      out.status = LineStatus::kFiltered;
      return out;
    }
  }
  if (options.event_type) {
    if (!have_extra) return out;
    if (extra != *options.event_type) {
      out.status = LineStatus::kFiltered;
      return out;
    }
  }
  out.status = LineStatus::kOk;
  out.triple = {std::string(user), std::string(item), *timestamp};
  return out;
}

}  // namespace

std::optional<TextFormat> ParseTextFormat(std::string_view name) {
  if (name == "tsv") return TextFormat::kTsv;
  if (name == "csv") return TextFormat::kCsv;
  if (name == "gowalla") return TextFormat::kGowalla;
  return std::nullopt;
}

IngestResult IngestInteractions(std::istream& source,
                                const IngestOptions& options) {
  if (!source) throw Error(ErrorKind::kIo, "unreadable interaction source");
  IngestResult result;
  std::string line;
  std::size_t data_lines = 0;
  bool first = true;
  while (std::getline(source, line)) {
    const std::string_view view = Trim(line);
    if (view.empty()) continue;
    const ParsedLine parsed = ParseLine(view, options);
    const bool is_first = first;
    first = false;
    if (parsed.status == LineStatus::kHeaderCandidate && is_first) {
      result.had_header = true;
      continue;
    }
    ++data_lines;
    switch (parsed.status) {
      case LineStatus::kOk:
        result.triples.push_back(std::move(parsed.triple));
        break;
      case LineStatus::kFiltered:
        ++result.filtered_count;
        break;
      case LineStatus::kMalformed:
      case LineStatus::kHeaderCandidate:
        ++result.malformed_count;
        break;
    }
  }
  if (source.bad()) throw Error(ErrorKind::kIo, "read failure");
  if (result.malformed_count * 2 > data_lines) {
    throw Error(ErrorKind::kFormat,
                std::to_string(result.malformed_count) + " of " +
                    std::to_string(data_lines) + " lines are malformed");
  }
  return result;
}

IngestResult IngestInteractionsFile(const std::filesystem::path& path,
                                    const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return IngestInteractions(in, options);
}

std::vector<InteractionTriple> DeduplicateTriples(
    std::span<const InteractionTriple> triples) {
  std::vector<InteractionTriple> out;
  out.reserve(triples.size());
  std::unordered_map<std::string, std::size_t> position;
  std::string key;
  for (const auto& t : triples) {
    key.assign(t.user_id);
    key.push_back('\0');
    key.append(t.item_id);
    const auto [it, inserted] = position.try_emplace(key, out.size());
    if (inserted) {
      out.push_back(t);
    } else {
      auto& kept = out[it->second];
      kept.timestamp = std::min(kept.timestamp, t.timestamp);
    }
  }
  return out;
}

std::vector<InteractionTriple> KCoreFilter(
    std::span<const InteractionTriple> triples, int min_interactions) {
  if (min_interactions < 1) {
    throw Error(ErrorKind::kArgument, "min_interactions must be >= 1");
  }
  std::vector<InteractionTriple> deduped = DeduplicateTriples(triples);
  IdMaps maps;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  edges.reserve(deduped.size());
  for (const auto& t : deduped) {
    edges.emplace_back(maps.InternUser(t.user_id), maps.InternItem(t.item_id));
  }
  const auto threshold = static_cast<std::size_t>(min_interactions);
  std::vector<char> alive(edges.size(), 1);
  std::vector<std::size_t> user_degree(maps.user_count());
  std::vector<std::size_t> item_degree(maps.item_count());
  for (bool changed = true; changed;) {
    std::fill(user_degree.begin(), user_degree.end(), 0);
    std::fill(item_degree.begin(), item_degree.end(), 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!alive[e]) continue;
      ++user_degree[edges[e].first];
      ++item_degree[edges[e].second];
    }
    changed = false;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (alive[e] && (user_degree[edges[e].first] < threshold ||
                       item_degree[edges[e].second] < threshold)) {
        alive[e] = 0;
        changed = true;
      }
    }
  }
  std::vector<InteractionTriple> out;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (alive[e]) out.push_back(std::move(deduped[e]));
  }
  return out;
}

NodeIndex IdMaps::InternUser(const std::string& token) {
  const auto [it, inserted] =
      user_index_.try_emplace(token, static_cast<NodeIndex>(user_tokens_.size()));
  if (inserted) user_tokens_.push_back(token);
  return it->second;
}

NodeIndex IdMaps::InternItem(const std::string& token) {
  const auto [it, inserted] =
      item_index_.try_emplace(token, static_cast<NodeIndex>(item_tokens_.size()));
  if (inserted) item_tokens_.push_back(token);
  return it->second;
}

std::optional<NodeIndex> IdMaps::FindUser(const std::string& token) const {
  const auto it = user_index_.find(token);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeIndex> IdMaps::FindItem(const std::string& token) const {
  const auto it = item_index_.find(token);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

InteractionDataset InteractionDataset::FromEdges(
    std::size_t n_users, std::size_t n_items, std::span<const Edge> edges,
    std::size_t real_user_count, std::shared_ptr<const IdMaps> id_maps) {
  if (real_user_count > n_users) {
    throw Error(ErrorKind::kArgument, "real_user_count exceeds n_users");
  }
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (const auto& [u, i] : sorted) {
    if (u < 0 || static_cast<std::size_t>(u) >= n_users || i < 0 ||
        static_cast<std::size_t>(i) >= n_items) {
      throw Error(ErrorKind::kBounds, "edge (" + std::to_string(u) + ", " +
                                          std::to_string(i) +
                                          ") outside " +
                                          std::to_string(n_users) + "x" +
                                          std::to_string(n_items));
    }
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  InteractionDataset ds;
  ds.n_users_ = n_users;
  ds.n_items_ = n_items;
  ds.real_user_count_ = real_user_count;
  ds.id_maps_ = std::move(id_maps);

  ds.user_offsets_.assign(n_users + 1, 0);
  ds.item_offsets_.assign(n_items + 1, 0);
  ds.user_items_.resize(sorted.size());
  ds.item_users_.resize(sorted.size());
  for (const auto& [u, i] : sorted) {
    ++ds.user_offsets_[u + 1];
    ++ds.item_offsets_[i + 1];
  }
  std::partial_sum(ds.user_offsets_.begin(), ds.user_offsets_.end(),
                   ds.user_offsets_.begin());
  std::partial_sum(ds.item_offsets_.begin(), ds.item_offsets_.end(),
                   ds.item_offsets_.begin());
  std::vector<std::int64_t> item_cursor(ds.item_offsets_.begin(),
                                        ds.item_offsets_.end() - 1);
  for (std::size_t e = 0; e < sorted.size(); ++e) {
    const auto [u, i] = sorted[e];
    ds.user_items_[e] = i;
    ds.item_users_[item_cursor[i]++] = u;
  }
  return ds;
}

bool InteractionDataset::HasInteraction(NodeIndex u, NodeIndex i) const {
  const auto items = UserItems(u);
  return std::binary_search(items.begin(), items.end(), i);
}

std::vector<InteractionDataset::Edge> InteractionDataset::Edges() const {
  std::vector<Edge> edges;
  edges.reserve(nnz());
  for (std::size_t u = 0; u < n_users_; ++u) {
    for (NodeIndex i : UserItems(static_cast<NodeIndex>(u))) {
      edges.emplace_back(static_cast<NodeIndex>(u), i);
    }
  }
  return edges;
}

std::optional<std::string> InteractionDataset::CheckInvariants() const {
  if (user_offsets_.size() != n_users_ + 1 ||
      item_offsets_.size() != n_items_ + 1) {
    return "offset arrays have wrong length";
  }
  if (user_items_.size() != item_users_.size()) {
    return "by_user and by_item edge counts differ";
  }
  if (real_user_count_ > n_users_) return "real_user_count > n_users";
  if (static_cast<std::size_t>(user_offsets_.back()) != user_items_.size() ||
      static_cast<std::size_t>(item_offsets_.back()) != item_users_.size()) {
    return "offsets do not cover the edge arrays";
  }
  std::vector<Edge> from_items;
  from_items.reserve(nnz());
  for (std::size_t i = 0; i < n_items_; ++i) {
    const auto users = ItemUsers(static_cast<NodeIndex>(i));
    for (std::size_t k = 0; k < users.size(); ++k) {
      if (users[k] < 0 || static_cast<std::size_t>(users[k]) >= n_users_) {
        return "user index out of range in by_item";
      }
      if (k > 0 && users[k] <= users[k - 1]) {
        return "by_item list not strictly increasing";
      }
      from_items.emplace_back(users[k], static_cast<NodeIndex>(i));
    }
  }
  for (std::size_t u = 0; u < n_users_; ++u) {
    const auto items = UserItems(static_cast<NodeIndex>(u));
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (items[k] < 0 || static_cast<std::size_t>(items[k]) >= n_items_) {
        return "item index out of range in by_user";
      }
      if (k > 0 && items[k] <= items[k - 1]) {
        return "by_user list not strictly increasing";
      }
    }
  }
  std::sort(from_items.begin(), from_items.end());
  if (from_items != Edges()) return "by_user and by_item edge sets differ";
  return std::nullopt;
}

InteractionDataset BuildDataset(std::span<const InteractionTriple> triples) {
  const std::vector<InteractionTriple> deduped = DeduplicateTriples(triples);
  auto maps = std::make_shared<IdMaps>();
  std::vector<InteractionDataset::Edge> edges;
  edges.reserve(deduped.size());
  for (const auto& t : deduped) {
    edges.emplace_back(maps->InternUser(t.user_id),
                       maps->InternItem(t.item_id));
  }
  const std::size_t n = maps->user_count();
  const std::size_t m = maps->item_count();
  return InteractionDataset::FromEdges(n, m, edges, n, std::move(maps));
}

SplitDataset ChronologicalSplit(std::span<const InteractionTriple> triples,
                                double train_ratio) {
  if (!(train_ratio > 0.0 && train_ratio <= 1.0)) {
    throw Error(ErrorKind::kArgument, "train_ratio must lie in (0, 1]");
  }
  const std::vector<InteractionTriple> deduped = DeduplicateTriples(triples);
  auto maps = std::make_shared<IdMaps>();
  struct Stamped {
    std::int64_t timestamp;
    NodeIndex item;
  };
  std::vector<std::vector<Stamped>> per_user;
  for (const auto& t : deduped) {
    const NodeIndex u = maps->InternUser(t.user_id);
    const NodeIndex i = maps->InternItem(t.item_id);
    if (static_cast<std::size_t>(u) >= per_user.size()) per_user.resize(u + 1);
    per_user[u].push_back({t.timestamp, i});
  }
  std::vector<InteractionDataset::Edge> train_edges;
  std::vector<InteractionDataset::Edge> validation_edges;
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& list = per_user[u];
    std::sort(list.begin(), list.end(), [](const Stamped& a, const Stamped& b) {
      return std::tie(a.timestamp, a.item) < std::tie(b.timestamp, b.item);
    });
    // The epsilon absorbs products such as 0.7 * 10 = 7.000000000000001.
    const auto cut = static_cast<std::size_t>(std::ceil(
        train_ratio * static_cast<double>(list.size()) - 1e-9));
    for (std::size_t k = 0; k < list.size(); ++k) {
      auto& dst = k < cut ? train_edges : validation_edges;
      dst.emplace_back(static_cast<NodeIndex>(u), list[k].item);
    }
  }
  const std::size_t n = maps->user_count();
  const std::size_t m = maps->item_count();
  std::shared_ptr<const IdMaps> shared = std::move(maps);
  return {InteractionDataset::FromEdges(n, m, train_edges, n, shared),
          InteractionDataset::FromEdges(n, m, validation_edges, n, shared)};
}

std::size_t FakeInteractions::nnz() const {
  std::size_t total = 0;
  for (const auto& row : rows) total += row.size();
  return total;
}

std::optional<std::string> FakeInteractions::CheckInvariants(
    std::size_t n_items, std::span<const NodeIndex> targets) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "fake row " + std::to_string(r) + ": ";
    if (row.empty()) return where + "empty";
    if (row.size() > budget) return where + "exceeds budget";
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] < 0 || static_cast<std::size_t>(row[k]) >= n_items) {
        return where + "item index out of range";
      }
      if (k > 0 && row[k] <= row[k - 1]) {
        return where + "not strictly increasing";
      }
    }
    for (NodeIndex t : targets) {
      if (!std::binary_search(row.begin(), row.end(), t)) {
        return where + "missing target " + std::to_string(t);
      }
    }
  }
  return std::nullopt;
}

InteractionDataset InjectFake(const InteractionDataset& dataset,
                              const FakeInteractions& fake) {
  if (dataset.fake_user_count() != 0) {
    throw Error(ErrorKind::kArgument,
                "dataset already contains fake users; inject into the real "
                "dataset");
  }
  std::vector<InteractionDataset::Edge> edges = dataset.Edges();
  const auto base = static_cast<NodeIndex>(dataset.real_user_count());
  for (std::size_t r = 0; r < fake.rows.size(); ++r) {
    for (NodeIndex item : fake.rows[r]) {
      if (item < 0 || static_cast<std::size_t>(item) >= dataset.n_items()) {
        throw Error(ErrorKind::kBounds,
                    "fake row " + std::to_string(r) + " references item " +
                        std::to_string(item));
      }
      edges.emplace_back(base + static_cast<NodeIndex>(r), item);
    }
  }
  return InteractionDataset::FromEdges(
      dataset.real_user_count() + fake.n_fake(), dataset.n_items(), edges,
      dataset.real_user_count(), dataset.id_maps());
}

std::vector<InteractionTriple> GenerateClusteredInteractions(
    const ClusteredFixtureOptions& options) {
  if (options.n_users == 0 || options.n_items == 0 ||
      options.n_clusters == 0 || options.cold_items >= options.n_items) {
    throw Error(ErrorKind::kArgument, "invalid clustered fixture options");
  }
  Rng rng(DeriveSeed(options.seed, "fixture"));
  const std::size_t warm_items = options.n_items - options.cold_items;
  std::vector<std::vector<char>> adj(options.n_users,
                                     std::vector<char>(options.n_items, 0));
  for (std::size_t u = 0; u < options.n_users; ++u) {
    for (std::size_t i = 0; i < options.n_items; ++i) {
      double p = (u % options.n_clusters) == (i % options.n_clusters)
                     ? options.p_in
                     : options.p_out;
      if (i >= warm_items) p = options.p_cold;
      adj[u][i] = UniformUnit(rng) < p ? 1 : 0;
    }
  }
  for (std::size_t u = 0; u < options.n_users; ++u) {
    if (std::find(adj[u].begin(), adj[u].end(), 1) != adj[u].end()) continue;
    std::size_t i;
    do {
      i = UniformIndex(rng, warm_items);
    } while (options.n_clusters <= warm_items &&
             i % options.n_clusters != u % options.n_clusters);
    adj[u][i] = 1;
  }
  for (std::size_t i = 0; i < options.n_items; ++i) {
    bool any = false;
    for (std::size_t u = 0; u < options.n_users && !any; ++u) any = adj[u][i];
    if (!any) adj[UniformIndex(rng, options.n_users)][i] = 1;
  }
  std::vector<InteractionTriple> triples;
  for (std::size_t u = 0; u < options.n_users; ++u) {
    for (std::size_t i = 0; i < options.n_items; ++i) {
      if (adj[u][i]) {
        triples.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 0});
      }
    }
  }
  std::vector<std::int64_t> stamps(triples.size());
  std::iota(stamps.begin(), stamps.end(), 1000);
  for (std::size_t k = stamps.size(); k > 1; --k) {
    std::swap(stamps[k - 1], stamps[UniformIndex(rng, k)]);
  }
  for (std::size_t e = 0; e < triples.size(); ++e) {
    triples[e].timestamp = stamps[e];
  }
  return triples;
}

}  // namespace gpatk

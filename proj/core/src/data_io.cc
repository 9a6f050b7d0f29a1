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

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gpatk/data.h"
#include "gpatk/error.h"

namespace gpatk {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::ofstream OpenForWrite(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream OpenForRead(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

// Reads a two-column integer TSV.
std::vector<std::pair<std::int64_t, std::int64_t>> ReadIndexPairs(
    const fs::path& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::int64_t a, b;
    if (!(fields >> a >> b)) {
      throw Error(ErrorKind::kFormat,
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected two integer columns");
    }
    pairs.emplace_back(a, b);
  }
  return pairs;
}

std::vector<std::string> ReadLines(const fs::path& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

void SaveDataset(const InteractionDataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string());

  ordered_json meta;
  meta["n_users"] = dataset.n_users();
  meta["n_items"] = dataset.n_items();
  meta["nnz"] = dataset.nnz();
  meta["real_user_count"] = dataset.real_user_count();
  OpenForWrite(dir / "meta.json") << meta.dump(2) << '\n';

  std::ofstream edges = OpenForWrite(dir / "edges.tsv");
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    for (NodeIndex i : dataset.UserItems(static_cast<NodeIndex>(u))) {
      edges << u << '\t' << i << '\n';
    }
  }

  if (const auto& maps = dataset.id_maps()) {
    std::ofstream users = OpenForWrite(dir / "users.tsv");
    for (std::size_t u = 0; u < maps->user_count(); ++u) {
      users << maps->UserToken(static_cast<NodeIndex>(u)) << '\n';
    }
    std::ofstream items = OpenForWrite(dir / "items.tsv");
    for (std::size_t i = 0; i < maps->item_count(); ++i) {
      items << maps->ItemToken(static_cast<NodeIndex>(i)) << '\n';
    }
  }
}

InteractionDataset LoadDataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::kIo, "dataset directory not found: " + dir.string());
  }
  ordered_json meta;
  try {
    meta = ordered_json::parse(OpenForRead(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat,
                (dir / "meta.json").string() + ": " + e.what());
  }
  const auto n_users = meta.at("n_users").get<std::size_t>();
  const auto n_items = meta.at("n_items").get<std::size_t>();
  const auto nnz = meta.at("nnz").get<std::size_t>();
  const auto real = meta.at("real_user_count").get<std::size_t>();

  std::vector<InteractionDataset::Edge> edges;
  for (const auto& [u, i] : ReadIndexPairs(dir / "edges.tsv")) {
    edges.emplace_back(static_cast<NodeIndex>(u), static_cast<NodeIndex>(i));
  }
  std::shared_ptr<IdMaps> maps;
  if (fs::exists(dir / "users.tsv") && fs::exists(dir / "items.tsv")) {
    maps = std::make_shared<IdMaps>();
    for (const auto& token : ReadLines(dir / "users.tsv")) {
      maps->InternUser(token);
    }
    for (const auto& token : ReadLines(dir / "items.tsv")) {
      maps->InternItem(token);
    }
  }
  InteractionDataset ds =
      InteractionDataset::FromEdges(n_users, n_items, edges, real, maps);
  if (ds.nnz() != nnz) {
    throw Error(ErrorKind::kFormat, dir.string() + ": meta.json nnz " +
                                        std::to_string(nnz) + " but edges.tsv has " +
                                        std::to_string(ds.nnz()));
  }
  return ds;
}

void SaveFakeInteractions(const FakeInteractions& fake, const fs::path& path) {
  std::ofstream out = OpenForWrite(path);
  for (std::size_t r = 0; r < fake.rows.size(); ++r) {
    for (NodeIndex i : fake.rows[r]) out << r << '\t' << i << '\n';
  }
}

FakeInteractions LoadFakeInteractions(const fs::path& path,
                                      std::size_t budget) {
  std::map<std::int64_t, std::vector<NodeIndex>> rows;
  for (const auto& [r, i] : ReadIndexPairs(path)) {
    rows[r].push_back(static_cast<NodeIndex>(i));
  }
  FakeInteractions fake;
  fake.budget = budget;
  std::int64_t expected = 0;
  for (auto& [r, items] : rows) {
    if (r != expected++) {
      throw Error(ErrorKind::kFormat,
                  path.string() + ": fake row indices are not contiguous");
    }
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    fake.rows.push_back(std::move(items));
  }
  return fake;
}

}  // namespace gpatk

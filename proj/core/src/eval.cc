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

#include "gpatk/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "gpatk/error.h"
#include "gpatk/random.h"

namespace gpatk {
namespace {

// Index from user to its list; nullptr for users without one.
std::vector<const TopKList*> IndexByUser(std::span<const TopKList> lists,
                                         std::size_t n_users) {
  std::vector<const TopKList*> by_user(n_users, nullptr);
  for (const auto& list : lists) {
    if (list.user < 0 || static_cast<std::size_t>(list.user) >= n_users) {
      throw Error(ErrorKind::kBounds,
                  "top-k list for unknown user " + std::to_string(list.user));
    }
    by_user[list.user] = &list;
  }
  return by_user;
}

const TopKList& RequireList(const std::vector<const TopKList*>& by_user,
                            NodeIndex user, std::size_t k) {
  const TopKList* list = by_user[user];
  if (list == nullptr) {
    throw Error(ErrorKind::kArgument,
                "no top-k list for real user " + std::to_string(user));
  }
  if (list->items.size() < k) {
    throw Error(ErrorKind::kArgument, "top-k list of user " +
                                          std::to_string(user) +
                                          " is shorter than k");
  }
  return *list;
}

bool InPrefix(const TopKList& list, std::size_t k, NodeIndex item) {
  return std::find(list.items.begin(), list.items.begin() + static_cast<long>(k),
                   item) != list.items.begin() + static_cast<long>(k);
}

double Cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a,
              const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

void MeanStd(const std::vector<double>& values, double& mean, double& stddev) {
  mean = 0.0;
  stddev = 0.0;
  if (values.empty()) return;
  mean = std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  stddev = std::sqrt(sq / static_cast<double>(values.size()));
}

void CheckFraction(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorKind::kNumeric,
                std::string(name) + " outside [0, 1]: " + std::to_string(value));
  }
}

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

double HitRatio(std::span<const TopKList> topk,
                const InteractionDataset& dataset, NodeIndex target,
                std::size_t k) {
  if (target < 0 || static_cast<std::size_t>(target) >= dataset.n_items()) {
    throw Error(ErrorKind::kBounds, "target item " + std::to_string(target));
  }
  const auto by_user = IndexByUser(topk, dataset.n_users());
  std::size_t eligible = 0;
  std::size_t hits = 0;
  for (std::size_t u = 0; u < dataset.real_user_count(); ++u) {
    const auto user = static_cast<NodeIndex>(u);
    if (dataset.HasInteraction(user, target)) continue;
    ++eligible;
    if (InPrefix(RequireList(by_user, user, k), k, target)) ++hits;
  }
  if (eligible == 0) {
    throw Error(ErrorKind::kUndefinedMetric,
                "every real user interacted with item " +
                    std::to_string(target));
  }
  const double hr = static_cast<double>(hits) / static_cast<double>(eligible);
  CheckFraction(hr, "hit ratio");
  return hr;
}

double RecallAtK(std::span<const TopKList> topk,
                 const InteractionDataset& dataset, const TargetSpec& targets,
                 std::size_t k) {
  targets.Validate(dataset.n_items());
  const auto by_user = IndexByUser(topk, dataset.n_users());
  std::size_t eligible = 0;
  double total = 0.0;
  for (std::size_t u = 0; u < dataset.real_user_count(); ++u) {
    const auto user = static_cast<NodeIndex>(u);
    std::size_t open = 0;
    for (NodeIndex t : targets.items) {
      if (!dataset.HasInteraction(user, t)) ++open;
    }
    if (open == 0) continue;
    ++eligible;
    const TopKList& list = RequireList(by_user, user, k);
    std::size_t hits = 0;
    for (NodeIndex t : targets.items) {
      if (!dataset.HasInteraction(user, t) && InPrefix(list, k, t)) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(open);
  }
  if (eligible == 0) {
    throw Error(ErrorKind::kUndefinedMetric,
                "every real user interacted with all target items");
  }
  const double recall = total / static_cast<double>(eligible);
  CheckFraction(recall, "recall");
  return recall;
}

double JaccardTopKSimilarity(std::span<const TopKList> lists_a,
                             std::span<const TopKList> lists_b) {
  if (lists_a.size() != lists_b.size()) {
    throw Error(ErrorKind::kArgument, "list collections differ in size");
  }
  if (lists_a.empty()) {
    throw Error(ErrorKind::kArgument, "no lists to compare");
  }
  std::vector<const TopKList*> a(lists_a.size()), b(lists_b.size());
  for (std::size_t k = 0; k < lists_a.size(); ++k) {
    a[k] = &lists_a[k];
    b[k] = &lists_b[k];
  }
  const auto by_user = [](const TopKList* x, const TopKList* y) {
    return x->user < y->user;
  };
  std::sort(a.begin(), a.end(), by_user);
  std::sort(b.begin(), b.end(), by_user);
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k]->user != b[k]->user ||
        (k > 0 && a[k]->user == a[k - 1]->user)) {
      throw Error(ErrorKind::kArgument, "list collections cover different users");
    }
    std::vector<NodeIndex> sa = a[k]->items, sb = b[k]->items;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<NodeIndex> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::back_inserter(common));
    const std::size_t united = sa.size() + sb.size() - common.size();
    total += united == 0 ? 1.0
                         : static_cast<double>(common.size()) /
                               static_cast<double>(united);
  }
  const double jaccard = total / static_cast<double>(a.size());
  CheckFraction(jaccard, "jaccard");
  return jaccard;
}

std::vector<InteractionDataset::Edge> SampleRandomPairs(
    const InteractionDataset& dataset, std::size_t count, std::uint64_t seed) {
  const std::size_t n = dataset.n_users();
  const std::size_t m = dataset.n_items();
  if (count > 0 && dataset.nnz() >= n * m) {
    throw Error(ErrorKind::kArgument, "no non-interacted pairs to sample");
  }
  Rng rng(DeriveSeed(seed, "random-pairs"));
  std::vector<InteractionDataset::Edge> pairs;
  pairs.reserve(count);
  while (pairs.size() < count) {
    const auto u = static_cast<NodeIndex>(UniformIndex(rng, n));
    const auto i = static_cast<NodeIndex>(UniformIndex(rng, m));
    if (!dataset.HasInteraction(u, i)) pairs.emplace_back(u, i);
  }
  return pairs;
}

GradientCosineStats GradientPairCosine(
    const InteractionDataset& dataset, const GradientBuffer& accumulated,
    std::span<const InteractionDataset::Edge> random_pairs) {
  if (accumulated.n_users() != dataset.n_users() ||
      accumulated.n_items() != dataset.n_items()) {
    throw Error(ErrorKind::kArgument, "gradient buffer does not match dataset");
  }
  std::vector<double> interacted, random;
  interacted.reserve(dataset.nnz());
  for (const auto& [u, i] : dataset.Edges()) {
    interacted.push_back(Cosine(accumulated.User(u), accumulated.Item(i)));
  }
  random.reserve(random_pairs.size());
  for (const auto& [u, i] : random_pairs) {
    random.push_back(Cosine(accumulated.User(u), accumulated.Item(i)));
  }
  GradientCosineStats stats;
  MeanStd(interacted, stats.interacted_mean, stats.interacted_std);
  MeanStd(random, stats.random_mean, stats.random_std);
  return stats;
}

GradientCosineStats GradientPairCosine(const InteractionDataset& dataset,
                                       const GradientBuffer& accumulated,
                                       std::uint64_t seed) {
  const auto pairs = SampleRandomPairs(dataset, dataset.nnz(), seed);
  return GradientPairCosine(dataset, accumulated, pairs);
}

std::vector<MetricAggregate> AggregateRecords(
    std::span<const MetricRecord> records) {
  std::vector<MetricAggregate> out;
  std::vector<std::vector<const MetricRecord*>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MetricAggregate& a) {
                             return a.victim == r.victim;
                           });
    if (it == out.end()) {
      out.push_back({r.victim});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& group = groups[g];
    const auto n = static_cast<double>(group.size());
    double hr = 0.0, recall = 0.0;
    for (const auto* r : group) {
      hr += r->hr_at_k;
      recall += r->recall_at_k;
    }
    out[g].count = group.size();
    out[g].hr_mean = hr / n;
    out[g].recall_mean = recall / n;
    if (group.size() > 1) {
      double hr_sq = 0.0, recall_sq = 0.0;
      for (const auto* r : group) {
        hr_sq += (r->hr_at_k - out[g].hr_mean) * (r->hr_at_k - out[g].hr_mean);
        recall_sq += (r->recall_at_k - out[g].recall_mean) *
                     (r->recall_at_k - out[g].recall_mean);
      }
      out[g].hr_std = std::sqrt(hr_sq / (n - 1.0));
      out[g].recall_std = std::sqrt(recall_sq / (n - 1.0));
    }
  }
  return out;
}

MetricsReport EvaluateAttack(const InteractionDataset& poisoned,
                             std::span<const VictimConfig> victims,
                             std::span<const TargetSpec> target_sets,
                             std::size_t k,
                             std::span<const std::uint64_t> seeds) {
  if (k < 1) throw Error(ErrorKind::kArgument, "k must be >= 1");
  for (const auto& targets : target_sets) targets.Validate(poisoned.n_items());
  const std::vector<NodeIndex> users = RealUsers(poisoned);
  MetricsReport report;
  for (const auto& victim : victims) {
    for (std::uint64_t seed : seeds) {
      TrainConfig config = victim.train;
      config.seed = seed;
      std::vector<TopKList> topk;
      try {
        const EmbeddingTable model = TrainFromScratch(poisoned, config);
        topk = TopKForUsers(model, poisoned, users, k);
      } catch (const Error& e) {
        throw Error(e.kind(), "victim " + victim.tag + ": " + e.what());
      }
      for (std::size_t t = 0; t < target_sets.size(); ++t) {
        const TargetSpec& targets = target_sets[t];
        double hr_total = 0.0;
        std::size_t hr_defined = 0;
        for (NodeIndex item : targets.items) {
          try {
            hr_total += HitRatio(topk, poisoned, item, k);
            ++hr_defined;
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::kUndefinedMetric) throw;
          }
        }
        if (hr_defined == 0) {
          throw Error(ErrorKind::kUndefinedMetric,
                      "target set " + std::to_string(t) +
                          " has no eligible users");
        }
        MetricRecord record;
        record.victim = victim.tag;
        record.target_set = t;
        record.seed = seed;
        record.k = k;
        record.hr_at_k = hr_total / static_cast<double>(hr_defined);
        record.recall_at_k = RecallAtK(topk, poisoned, targets, k);
        report.records.push_back(std::move(record));
      }
    }
  }
  report.aggregates = AggregateRecords(report.records);
  return report;
}

std::string MetricsReportJson(const MetricsReport& report,
                              const std::string& config_hash,
                              std::uint64_t seed) {
  nlohmann::ordered_json json;
  json["config_hash"] = config_hash;
  json["seed"] = seed;
  json["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    nlohmann::ordered_json rec;
    rec["victim"] = r.victim;
    rec["target_set"] = r.target_set;
    rec["seed"] = r.seed;
    rec["k"] = r.k;
    rec["hr_at_k"] = r.hr_at_k;
    rec["recall_at_k"] = r.recall_at_k;
    json["records"].push_back(std::move(rec));
  }
  json["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : report.aggregates) {
    nlohmann::ordered_json agg;
    agg["victim"] = a.victim;
    agg["count"] = a.count;
    agg["hr_mean"] = a.hr_mean;
    agg["hr_std"] = a.hr_std;
    agg["recall_mean"] = a.recall_mean;
    agg["recall_std"] = a.recall_std;
    json["aggregates"].push_back(std::move(agg));
  }
  return json.dump(2) + "\n";
}

std::string MetricsReportCsv(const MetricsReport& report) {
  std::string out = "victim,target_set,seed,hr,recall\n";
  for (const auto& r : report.records) {
    out += r.victim + "," + std::to_string(r.target_set) + "," +
           std::to_string(r.seed) + "," + FormatDouble(r.hr_at_k) + "," +
           FormatDouble(r.recall_at_k) + "\n";
  }
  return out;
}

std::string GradientCosineCsv(std::span<const GradientCosineRow> rows) {
  std::string out =
      "epoch,interacted_mean,interacted_std,random_mean,random_std\n";
  for (const auto& row : rows) {
    out += std::to_string(row.epoch) + "," +
           FormatDouble(row.stats.interacted_mean) + "," +
           FormatDouble(row.stats.interacted_std) + "," +
           FormatDouble(row.stats.random_mean) + "," +
           FormatDouble(row.stats.random_std) + "\n";
  }
  return out;
}

void WriteTextFile(const std::filesystem::path& path,
                   const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorKind::kIo, "write failure on " + path.string());
}

}  // namespace gpatk

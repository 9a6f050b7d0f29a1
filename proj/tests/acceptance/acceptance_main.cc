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

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/eval.h"
#include "gpatk/experiment.h"
#include "gpatk/gpengine.h"
#include "gpatk/random.h"
#include "gpatk/recmodel.h"
#include "gpatk/verification.h"
#include "testing/oracles.h"

namespace gpatk {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

double Since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

double MaxOf(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

FlatConfig DeskConfig(const std::string& name) {
  return FlatConfig::Load(fs::path(GPATK_SOURCE_DIR) / "configs" / name);
}

Outcome MessagePassing() {
  const SuiteResult r = RunMessagePassingSuite(20, 0);
  const bool ok = r.passed && r.values.size() == 20 && r.seconds < 1.0;
  return {ok ? Status::kPass : Status::kFail,
          "max |diff| " + Fmt("%.3g", MaxOf(r.values)) + " (<= 1e-12), " +
              Fmt("%.3f", r.seconds) + "s"};
}

Outcome TwoStep() {
  const SuiteResult r = RunTwoStepSuite(10, 0);
  const bool ok = r.passed && r.values.size() == 10 && r.seconds < 1.0;
  return {ok ? Status::kPass : Status::kFail,
          "max residual " + Fmt("%.3g", MaxOf(r.values)) + " (< 1e-8), " +
              Fmt("%.3f", r.seconds) + "s"};
}

Outcome Gradients() {
  bool ok = true;
  std::string detail;
  for (const SuiteResult& r : RunFiniteDifferenceSuites(20, 0)) {
    ok = ok && r.passed && r.values.size() == 20;
    detail += r.name + " " + Fmt("%.2g", MaxOf(r.values)) + " ";
  }
  return {ok ? Status::kPass : Status::kFail, detail + "(< 1e-6 relative)"};
}

Outcome Inertness() {
  const RandomInstance inst = MakeRandomInstance(30, 25, 4, 0.2, 1.0, 11);
  bool ok = true;
  for (NegativeMode mode : {NegativeMode::kSampled, NegativeMode::kAll}) {
    TrainConfig cfg;
    cfg.negatives = mode;
    cfg.batch_size = mode == NegativeMode::kAll ? 0 : 16;
    cfg.neg_weight = 0.5;
    cfg.dim = 6;
    cfg.epochs = 5;
    cfg.seed = 7;
    const EmbeddingTable plain = TrainFromScratch(inst.dataset, cfg);
    GpConfig zero;
    zero.alpha_odd = zero.alpha_even = 0.0;
    GpConfig closed;
    closed.xi_odd = closed.xi_even = std::numeric_limits<double>::infinity();
    for (const GpConfig* gp : {&zero, &closed}) {
      TrainHooks hooks;
      hooks.gp = gp;
      ok = ok && TrainFromScratch(inst.dataset, cfg, hooks) == plain;
    }
  }
  return {ok ? Status::kPass : Status::kFail,
          "alpha=0 and xi=+inf trajectories bitwise equal to plain"};
}

Outcome Acceleration() {
  const auto start = Clock::now();
  const FlatConfig base = DeskConfig("desk_analysis.conf");
  std::vector<double> plain, gp;
  std::vector<int> epochs;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    FlatConfig flat = base;
    flat.Set("seed", std::to_string(s));
    const ExperimentConfig c = ExperimentConfig::FromFlat(flat);
    const InteractionDataset ds = LoadExperimentDataset(c);
    const auto rows = JaccardVersusEpochs(
        ds, c.victims.front().train, c.analyze_victim_epochs, c.surrogate.train,
        c.gp_surrogate, c.gp, c.analyze_epochs, c.analyze_k, c.seed);
    plain.resize(rows.size());
    gp.resize(rows.size());
    epochs.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      epochs[r] = rows[r].epochs;
      plain[r] += rows[r].plain / seeds;
      gp[r] += rows[r].gp / seeds;
    }
  }
  const auto at = [&](const std::vector<double>& v, int e) {
    for (std::size_t r = 0; r < epochs.size(); ++r) {
      if (epochs[r] == e) return v[r];
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double seconds = Since(start);
  const bool ok = at(gp, 1) >= at(plain, 1) && at(gp, 5) >= at(plain, 5) &&
                  at(gp, 5) >= at(plain, 10) - 0.02 && seconds < 120.0;
  return {ok ? Status::kPass : Status::kFail,
          "Jaccard@10 plain/gp E1 " + Fmt("%.3f", at(plain, 1)) + "/" +
              Fmt("%.3f", at(gp, 1)) + ", E5 " + Fmt("%.3f", at(plain, 5)) +
              "/" + Fmt("%.3f", at(gp, 5)) + ", plain E10 " +
              Fmt("%.3f", at(plain, 10)) + ", " + Fmt("%.1f", seconds) + "s"};
}

Outcome AttackOrdering() {
  const auto start = Clock::now();
  const FlatConfig base = DeskConfig("desk_attack.conf");
  const int seeds = 5;
  double none = 0.0, plain = 0.0, with_gp = 0.0;
  for (int s = 1; s <= seeds; ++s) {
    const auto hr = [&](const std::string& kind, bool gp) {
      FlatConfig flat = base;
      flat.Set("seed", std::to_string(s));
      flat.Set("eval.seeds", std::to_string(s));
      flat.Set("attack.kind", kind);
      flat.Set("gp.enabled", gp ? "true" : "false");
      flat.Set("surrogate.retrain_epochs", "1");
      const ExperimentConfig c = ExperimentConfig::FromFlat(flat);
      const InteractionDataset ds = LoadExperimentDataset(c);
      const auto report = RunAttackExperiment(c, ds, ResolveTargets(c, ds));
      return report.aggregates.front().hr_mean;
    };
    none += hr("none", false) / seeds;
    plain += hr("dpa2dl", false) / seeds;
    with_gp += hr("dpa2dl", true) / seeds;
  }
  const double seconds = Since(start);
  const bool ok = with_gp >= plain && plain >= none && seconds < 300.0;
  return {ok ? Status::kPass : Status::kFail,
          "HR@10 none " + Fmt("%.4f", none) + ", DPA2DL " +
              Fmt("%.4f", plain) + ", DPA2DL+GP " + Fmt("%.4f", with_gp) +
              ", " + Fmt("%.1f", seconds) + "s"};
}

InteractionDataset RandomGraph(std::size_t n, std::size_t m, std::size_t nnz,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeIndex> user(0, static_cast<NodeIndex>(n - 1));
  std::uniform_int_distribution<NodeIndex> item(0, static_cast<NodeIndex>(m - 1));
  std::set<InteractionDataset::Edge> edges;
  while (edges.size() < nnz) edges.emplace(user(rng), item(rng));
  const std::vector<InteractionDataset::Edge> list(edges.begin(), edges.end());
  return InteractionDataset::FromEdges(n, m, list, n);
}

Outcome Scaling() {
  const std::vector<std::size_t> sizes = {10000, 20000, 40000};
  GpConfig cfg;
  cfg.layers = 2;
  cfg.xi_odd = cfg.xi_even = -std::numeric_limits<double>::infinity();
  std::vector<double> times;
  for (std::size_t nnz : sizes) {
    const InteractionDataset ds = RandomGraph(4000, 4000, nnz, nnz);
    const EmbeddingTable table = InitEmbeddings(4000, 4000, 32, 1);
    const GradientBuffer g(4000, 4000, InitEmbeddings(4000, 4000, 32, 2).values());
    std::vector<double> runs;
    for (int rep = 0; rep < 9; ++rep) {
      const auto start = Clock::now();
      const GradientBuffer out = ApplyGradientPassing(g, table, ds, cfg);
      runs.push_back(Since(start));
      if (!out.AllFinite()) return {Status::kFail, "non-finite output"};
    }
    std::nth_element(runs.begin(), runs.begin() + 4, runs.end());
    times.push_back(runs[4]);
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    mx += static_cast<double>(sizes[k]) / 3.0;
    my += times[k] / 3.0;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double dx = static_cast<double>(sizes[k]) - mx, dy = times[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r2 = syy == 0 ? 0.0 : sxy * sxy / (sxx * syy);
  return {r2 > 0.95 ? Status::kPass : Status::kFail,
          "median ms " + Fmt("%.2f", times[0] * 1e3) + "/" +
              Fmt("%.2f", times[1] * 1e3) + "/" + Fmt("%.2f", times[2] * 1e3) +
              ", R^2 " + Fmt("%.4f", r2) + " (> 0.95)"};
}

Outcome MetricOracles() {
  int fixtures = 0, mismatches = 0, singleton_mismatches = 0;
  for (std::uint64_t seed = 0; fixtures < 50; ++seed) {
    const std::size_t n = 4 + seed % 6, m = 10 + seed % 5, k = 1 + seed % 4;
    const RandomInstance inst = MakeRandomInstance(n, m, 3, 0.25, 1.0, seed);
    const InteractionDataset& ds = inst.dataset;
    bool room = true;
    for (std::size_t u = 0; u < n; ++u) {
      room = room && ds.UserDegree(static_cast<NodeIndex>(u)) + k <= m;
    }
    if (!room) continue;
    ++fixtures;
    const auto users = RealUsers(ds);
    const auto topk = TopKForUsers(inst.embeddings, ds, users, k);
    testing::EdgeList edges;
    for (const auto& [u, i] : ds.Edges()) edges.emplace_back(u, i);
    const testing::Dense y =
        testing::InteractionMatrix(static_cast<int>(n), static_cast<int>(m), edges);
    const testing::Dense uu = inst.embeddings.Users();
    const testing::Dense vv = inst.embeddings.Items();
    const auto target = static_cast<NodeIndex>(seed % m);
    const auto second = static_cast<NodeIndex>((seed + 5) % m);
    const double hr_oracle = testing::HitRatioOracle(
        uu, vv, y, static_cast<int>(n), target, static_cast<int>(k));
    const double rec_oracle = testing::RecallOracle(
        uu, vv, y, static_cast<int>(n), {target, second}, static_cast<int>(k));
    if (hr_oracle >= 0) {
      const double hr = HitRatio(topk, ds, target, k);
      if (hr != hr_oracle) ++mismatches;
      if (RecallAtK(topk, ds, TargetSpec{{target}}, k) != hr) {
        ++singleton_mismatches;
      }
    }
    if (rec_oracle >= 0) {
      TargetSpec pair{{std::min(target, second), std::max(target, second)}};
      if (RecallAtK(topk, ds, pair, k) != rec_oracle) ++mismatches;
    }
  }
  const bool ok = mismatches == 0 && singleton_mismatches == 0;
  return {ok ? Status::kPass : Status::kFail,
          std::to_string(fixtures) + " fixtures, " + std::to_string(mismatches) +
              " oracle mismatches, " + std::to_string(singleton_mismatches) +
              " singleton mismatches"};
}

Outcome GowallaCounts() {
  fs::path path;
  if (const char* env = std::getenv("GPATK_GOWALLA_CHECKINS")) {
    path = env;
  } else {
    path = fs::path(GPATK_SOURCE_DIR) / "data" / "loc-gowalla_totalCheckins.txt";
  }
  if (!fs::exists(path)) {
    return {Status::kSkip, "check-in file not found at " + path.string() +
                               " (set GPATK_GOWALLA_CHECKINS)"};
  }
  FlatConfig flat;
  flat.Set("prepare.input", path.string());
  flat.Set("prepare.format", "gowalla");
  flat.Set("prepare.min_interactions", "15");
  const PreparedData data = PrepareData(ExperimentConfig::FromFlat(flat));
  const PrepareSummary& s = data.summary;
  const bool ok = s.n_users == 13149 && s.n_items == 14009 &&
                  s.n_interactions == 535650;
  return {ok ? Status::kPass : Status::kFail,
          std::to_string(s.n_users) + " users, " + std::to_string(s.n_items) +
              " items, " + std::to_string(s.n_interactions) +
              " interactions (want 13149/14009/535650)"};
}

Outcome CosineDirection() {
  const FlatConfig base = DeskConfig("desk_analysis.conf");
  const int seeds = 5;
  std::vector<int> wins;
  for (int s = 1; s <= seeds; ++s) {
    FlatConfig flat = base;
    flat.Set("seed", std::to_string(s));
    const ExperimentConfig c = ExperimentConfig::FromFlat(flat);
    const InteractionDataset ds = LoadExperimentDataset(c);
    const auto rows =
        GradientCosineCurve(ds, c.surrogate.train, c.cosine_epochs, c.seed);
    wins.resize(rows.size());
    for (std::size_t e = 0; e < rows.size(); ++e) {
      if (rows[e].stats.interacted_mean > rows[e].stats.random_mean) ++wins[e];
    }
  }
  bool ok = wins.size() == 10;
  std::string detail = "seeds with interacted > random per epoch:";
  for (int w : wins) {
    ok = ok && 2 * w > seeds;
    detail += " " + std::to_string(w);
  }
  return {ok ? Status::kPass : Status::kFail, detail};
}

int Main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"message passing equals analytic gradient", MessagePassing},
      {"exact two-step matrix", TwoStep},
      {"finite-difference gradients", Gradients},
      {"gradient passing inertness", Inertness},
      {"retraining acceleration", Acceleration},
      {"attack ordering", AttackOrdering},
      {"linear cost in nnz", Scaling},
      {"metric oracles", MetricOracles},
      {"gowalla statistics", GowallaCounts},
      {"gradient similarity direction", CosineDirection},
  };
  int failures = 0;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    Outcome outcome;
    try {
      outcome = checks[k].second();
    } catch (const std::exception& e) {
      outcome = {Status::kFail, std::string("error: ") + e.what()};
    }
    const char* tag = outcome.status == Status::kPass   ? "PASS"
                      : outcome.status == Status::kSkip ? "SKIP"
                                                        : "FAIL";
    if (outcome.status == Status::kFail) ++failures;
    std::printf("criterion %zu %s: %s: %s\n", k + 1, tag,
                checks[k].first.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace gpatk

int main() { return gpatk::Main(); }

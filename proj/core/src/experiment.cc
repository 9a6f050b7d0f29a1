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

#include "gpatk/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gpatk/error.h"
#include "gpatk/random.h"

namespace gpatk {
namespace {

std::string Trim(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return std::string(text.substr(begin, end - begin + 1));
}

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::vector<int> ParseIntList(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const auto& part : SplitList(text, ',')) {
    out.push_back(static_cast<int>(ParseInt(part, what)));
  }
  return out;
}

std::vector<double> ParseDoubleList(const std::string& text,
                                    const std::string& what) {
  std::vector<double> out;
  for (const auto& part : SplitList(text, ',')) {
    out.push_back(ParseDouble(part, what));
  }
  return out;
}

// R distinct picks of `count` items from `pool`, each set sorted.
std::vector<TargetSpec> SampleTargetSets(std::vector<NodeIndex> pool,
                                         std::size_t count,
                                         std::size_t repeats, Rng& rng) {
  if (count == 0 || count > pool.size()) {
    throw Error(ErrorKind::kArgument,
                "cannot draw " + std::to_string(count) + " targets from " +
                    std::to_string(pool.size()) + " candidates");
  }
  std::vector<TargetSpec> sets;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t k = 0; k < count; ++k) {
      std::swap(pool[k], pool[k + UniformIndex(rng, pool.size() - k)]);
    }
    TargetSpec spec{{pool.begin(), pool.begin() + count}};
    std::sort(spec.items.begin(), spec.items.end());
    sets.push_back(std::move(spec));
  }
  return sets;
}

}  // namespace

// FlatConfig ---------------------------------------------------------------

FlatConfig FlatConfig::Parse(std::istream& in, const std::string& source) {
  FlatConfig config;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = Trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kFormat, where + ": expected key = value");
    }
    const std::string key = Trim(std::string_view(body).substr(0, eq));
    const std::string value = Trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::kFormat, where + ": empty key");
    if (config.Has(key)) {
      throw Error(ErrorKind::kFormat, where + ": duplicate key " + key);
    }
    config.entries_[key] = value;
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "cannot read config " + source);
  return config;
}

FlatConfig FlatConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  return Parse(in, path.string());
}

void FlatConfig::Set(const std::string& key, const std::string& value) {
  if (key.empty()) throw Error(ErrorKind::kArgument, "empty config key");
  entries_[key] = value;
}

bool FlatConfig::Has(const std::string& key) const {
  return entries_.count(key) != 0;
}

std::optional<std::string> FlatConfig::Get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string FlatConfig::GetString(const std::string& key,
                                  const std::string& fallback) const {
  return Get(key).value_or(fallback);
}

double FlatConfig::GetDouble(const std::string& key, double fallback) const {
  const auto value = Get(key);
  return value ? ParseDouble(*value, key) : fallback;
}

std::int64_t FlatConfig::GetInt(const std::string& key,
                                std::int64_t fallback) const {
  const auto value = Get(key);
  return value ? ParseInt(*value, key) : fallback;
}

bool FlatConfig::GetBool(const std::string& key, bool fallback) const {
  const auto value = Get(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1" || *value == "yes") return true;
  if (*value == "false" || *value == "0" || *value == "no") return false;
  throw Error(ErrorKind::kArgument, key + ": expected a boolean, got '" +
                                        *value + "'");
}

std::string FlatConfig::Canonical() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    if (key == "output.dir") continue;
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

std::string FlatConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : Canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

double ParseDouble(const std::string& text, const std::string& what) {
  std::string t = Trim(text);
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() ||
      std::isnan(value)) {
    throw Error(ErrorKind::kArgument,
                what + ": expected a number, got '" + text + "'");
  }
  return value;
}

std::int64_t ParseInt(const std::string& text, const std::string& what) {
  const std::string t = Trim(text);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorKind::kArgument,
                what + ": expected an integer, got '" + text + "'");
  }
  return value;
}

std::vector<std::string> SplitList(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<AttackKind> ParseAttackKind(const std::string& name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "random") return AttackKind::kRandom;
  if (name == "bandwagon") return AttackKind::kBandwagon;
  if (name == "dpa2dl") return AttackKind::kDpa2dl;
  return std::nullopt;
}

std::string AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone:
      return "none";
    case AttackKind::kRandom:
      return "random";
    case AttackKind::kBandwagon:
      return "bandwagon";
    case AttackKind::kDpa2dl:
      return "dpa2dl";
  }
  return "none";
}

SweepGrid DefaultSweepGrid() {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> xi{-inf, 0.0, inf};
  const std::vector<double> alpha{0.1, 1.0, 10.0, 100.0, 1000.0};
  return {xi, xi, alpha, alpha};
}

TrainConfig ParseTrainConfig(const FlatConfig& flat, const std::string& prefix,
                             TrainConfig defaults) {
  TrainConfig c = defaults;
  const auto key = [&](const char* name) { return prefix + "." + name; };
  const std::string loss = flat.GetString(
      key("loss"), c.loss == LossKind::kBce ? "bce" : "bpr");
  if (loss == "bce") {
    c.loss = LossKind::kBce;
  } else if (loss == "bpr") {
    c.loss = LossKind::kBpr;
  } else {
    throw Error(ErrorKind::kArgument, key("loss") + ": unknown loss " + loss);
  }
  c.lr = flat.GetDouble(key("lr"), c.lr);
  c.l2 = flat.GetDouble(key("l2"), c.l2);
  c.epochs = static_cast<int>(flat.GetInt(key("epochs"), c.epochs));
  c.batch_size = static_cast<std::size_t>(
      flat.GetInt(key("batch_size"), static_cast<std::int64_t>(c.batch_size)));
  c.neg_weight = flat.GetDouble(key("neg_weight"), c.neg_weight);
  c.negs_per_pos =
      static_cast<int>(flat.GetInt(key("negs_per_pos"), c.negs_per_pos));
  const std::string negatives = flat.GetString(
      key("negatives"),
      c.negatives == NegativeMode::kAll ? "all" : "sampled");
  if (negatives == "all") {
    c.negatives = NegativeMode::kAll;
  } else if (negatives == "sampled") {
    c.negatives = NegativeMode::kSampled;
  } else {
    throw Error(ErrorKind::kArgument,
                key("negatives") + ": expected all or sampled");
  }
  c.dim = static_cast<std::size_t>(
      flat.GetInt(key("dim"), static_cast<std::int64_t>(c.dim)));
  c.seed = static_cast<std::uint64_t>(
      flat.GetInt(key("seed"), static_cast<std::int64_t>(c.seed)));
  c.Validate();
  return c;
}

GpConfig ParseGpConfig(const FlatConfig& flat, GpConfig defaults) {
  GpConfig g = defaults;
  g.layers = static_cast<int>(flat.GetInt("gp.layers", g.layers));
  g.xi_odd = flat.GetDouble("gp.xi_odd", g.xi_odd);
  g.xi_even = flat.GetDouble("gp.xi_even", g.xi_even);
  g.alpha_odd = flat.GetDouble("gp.alpha_odd", g.alpha_odd);
  g.alpha_even = flat.GetDouble("gp.alpha_even", g.alpha_even);
  g.apply_probability =
      flat.GetDouble("gp.apply_probability", g.apply_probability);
  g.Validate();
  return g;
}

ExperimentConfig ExperimentConfig::FromFlat(const FlatConfig& flat) {
  ExperimentConfig c;
  c.seed = static_cast<std::uint64_t>(flat.GetInt("seed", 0));
  c.hash = flat.Hash();

  c.dataset_dir = flat.GetString("dataset.dir", "");
  const std::string synthetic = flat.GetString("dataset.synthetic", "none");
  if (synthetic == "clustered") {
    c.synthetic = true;
  } else if (synthetic != "none") {
    throw Error(ErrorKind::kArgument,
                "dataset.synthetic: expected none or clustered");
  }
  auto& fx = c.fixture;
  fx.n_users = static_cast<std::size_t>(
      flat.GetInt("fixture.n_users", static_cast<std::int64_t>(fx.n_users)));
  fx.n_items = static_cast<std::size_t>(
      flat.GetInt("fixture.n_items", static_cast<std::int64_t>(fx.n_items)));
  fx.n_clusters = static_cast<std::size_t>(flat.GetInt(
      "fixture.n_clusters", static_cast<std::int64_t>(fx.n_clusters)));
  fx.p_in = flat.GetDouble("fixture.p_in", fx.p_in);
  fx.p_out = flat.GetDouble("fixture.p_out", fx.p_out);
  fx.cold_items = static_cast<std::size_t>(flat.GetInt(
      "fixture.cold_items", static_cast<std::int64_t>(fx.cold_items)));
  fx.p_cold = flat.GetDouble("fixture.p_cold", fx.p_cold);
  fx.seed = static_cast<std::uint64_t>(
      flat.GetInt("fixture.seed", static_cast<std::int64_t>(fx.seed)));

  auto& pr = c.prepare;
  pr.input = flat.GetString("prepare.input", "");
  const std::string format = flat.GetString("prepare.format", "tsv");
  const auto parsed_format = ParseTextFormat(format);
  if (!parsed_format) {
    throw Error(ErrorKind::kArgument, "prepare.format: unknown " + format);
  }
  pr.ingest.format = *parsed_format;
  if (flat.Has("prepare.min_rating")) {
    pr.ingest.min_rating = flat.GetDouble("prepare.min_rating", 0.0);
  }
  if (flat.Has("prepare.event_type")) {
    pr.ingest.event_type = flat.GetString("prepare.event_type", "");
  }
  pr.min_interactions =
      static_cast<int>(flat.GetInt("prepare.min_interactions", 15));
  pr.train_ratio = flat.GetDouble("prepare.train_ratio", 0.8);

  auto& s = c.surrogate;
  s.train = ParseTrainConfig(flat, "surrogate", s.train);
  s.retrain_epochs =
      static_cast<int>(flat.GetInt("surrogate.retrain_epochs", 1));
  s.adv_epochs = static_cast<int>(flat.GetInt("surrogate.adv_epochs", 1));
  s.adv_weight = flat.GetDouble("surrogate.adv_weight", 1.0);
  s.pretrain = flat.GetBool("surrogate.pretrain", false);
  s.sample_ratio = flat.GetDouble("surrogate.sample_ratio", 0.0);
  s.Validate();
  c.gp_surrogate = ParseTrainConfig(flat, "gp_surrogate", s.train);

  for (const auto& tag : SplitList(flat.GetString("victims", "mf_bce"), ',')) {
    TrainConfig defaults;
    if (tag.find("bpr") != std::string::npos) defaults.loss = LossKind::kBpr;
    c.victims.push_back({tag, ParseTrainConfig(flat, "victim." + tag,
                                               defaults)});
  }
  if (c.victims.empty()) {
    throw Error(ErrorKind::kArgument, "victims: at least one victim needed");
  }

  c.gp_enabled = flat.GetBool("gp.enabled", false);
  c.gp = ParseGpConfig(flat);

  const std::string attack = flat.GetString("attack.kind", "dpa2dl");
  const auto kind = ParseAttackKind(attack);
  if (!kind) throw Error(ErrorKind::kArgument, "attack.kind: unknown " + attack);
  c.attack = *kind;
  c.n_fake = static_cast<std::size_t>(flat.GetInt("attack.n_fake", 0));
  c.tau = static_cast<std::size_t>(flat.GetInt("attack.tau", 0));
  c.targets = flat.GetString("targets", c.targets);

  const std::int64_t k = flat.GetInt("eval.k", 50);
  if (k < 1) throw Error(ErrorKind::kArgument, "eval.k must be >= 1");
  c.k = static_cast<std::size_t>(k);
  if (flat.Has("eval.seeds")) {
    c.eval_seeds.clear();
    for (const auto& part : SplitList(*flat.Get("eval.seeds"), ',')) {
      c.eval_seeds.push_back(
          static_cast<std::uint64_t>(ParseInt(part, "eval.seeds")));
    }
  } else {
    c.eval_seeds = {c.seed};
  }
  if (c.eval_seeds.empty()) {
    throw Error(ErrorKind::kArgument, "eval.seeds must not be empty");
  }

  if (flat.Has("analyze.epochs")) {
    c.analyze_epochs = ParseIntList(*flat.Get("analyze.epochs"),
                                    "analyze.epochs");
  }
  c.analyze_k = static_cast<std::size_t>(flat.GetInt("analyze.k", 10));
  c.analyze_victim_epochs =
      static_cast<int>(flat.GetInt("analyze.victim_epochs", 500));
  c.cosine_epochs = static_cast<int>(flat.GetInt("analyze.cosine_epochs", 10));

  c.sweep = DefaultSweepGrid();
  const std::pair<const char*, std::vector<double>*> axes[] = {
      {"sweep.xi_odd", &c.sweep.xi_odd},
      {"sweep.xi_even", &c.sweep.xi_even},
      {"sweep.alpha_odd", &c.sweep.alpha_odd},
      {"sweep.alpha_even", &c.sweep.alpha_even}};
  for (const auto& [key, axis] : axes) {
    if (flat.Has(key)) *axis = ParseDoubleList(*flat.Get(key), key);
  }

  c.out_dir = flat.GetString("output.dir", "out");
  return c;
}

// Pipeline -----------------------------------------------------------------

PreparedData PrepareData(const ExperimentConfig& config) {
  PreparedData prepared;
  std::vector<InteractionTriple> triples;
  if (config.synthetic) {
    triples = GenerateClusteredInteractions(config.fixture);
    prepared.summary.raw_lines = triples.size();
  } else {
    if (config.prepare.input.empty()) {
      throw Error(ErrorKind::kArgument,
                  "prepare.input is required unless dataset.synthetic is set");
    }
    if (!std::filesystem::exists(config.prepare.input)) {
      throw Error(ErrorKind::kIo,
                  "input not found: " + config.prepare.input.string());
    }
    IngestResult ingest =
        IngestInteractionsFile(config.prepare.input, config.prepare.ingest);
    prepared.summary.malformed = ingest.malformed_count;
    prepared.summary.filtered = ingest.filtered_count;
    prepared.summary.raw_lines = ingest.triples.size() +
                                 ingest.malformed_count +
                                 ingest.filtered_count;
    triples = std::move(ingest.triples);
  }
  const std::vector<InteractionTriple> core =
      KCoreFilter(triples, config.prepare.min_interactions);
  if (core.empty()) {
    throw Error(ErrorKind::kArgument,
                "no interactions survive the k-core filter");
  }
  prepared.split = ChronologicalSplit(core, config.prepare.train_ratio);
  auto& s = prepared.summary;
  s.n_users = prepared.split.train.n_users();
  s.n_items = prepared.split.train.n_items();
  s.n_interactions = core.size();
  s.train_nnz = prepared.split.train.nnz();
  s.validation_nnz = prepared.split.validation.nnz();
  return prepared;
}

PrepareSummary PrepareAndSave(const ExperimentConfig& config,
                              const std::filesystem::path& out) {
  const PreparedData prepared = PrepareData(config);
  SaveDataset(prepared.split.train, out / "train");
  SaveDataset(prepared.split.validation, out / "validation");
  const PrepareSummary& s = prepared.summary;
  nlohmann::ordered_json meta;
  meta["n_users"] = s.n_users;
  meta["n_items"] = s.n_items;
  meta["n_interactions"] = s.n_interactions;
  meta["train_interactions"] = s.train_nnz;
  meta["validation_interactions"] = s.validation_nnz;
  meta["raw_records"] = s.raw_lines;
  meta["malformed_records"] = s.malformed;
  meta["filtered_records"] = s.filtered;
  meta["min_interactions"] = config.prepare.min_interactions;
  meta["train_ratio"] = config.prepare.train_ratio;
  meta["config_hash"] = config.hash;
  meta["seed"] = config.seed;
  WriteTextFile(out / "meta.json", meta.dump(2) + "\n");
  return s;
}

InteractionDataset LoadExperimentDataset(const ExperimentConfig& config) {
  if (config.dataset_dir.empty()) {
    if (config.synthetic) return PrepareData(config).split.train;
    throw Error(ErrorKind::kArgument,
                "dataset.dir is required unless dataset.synthetic is set");
  }
  if (!std::filesystem::exists(config.dataset_dir)) {
    throw Error(ErrorKind::kIo,
                "dataset not found: " + config.dataset_dir.string());
  }
  const auto train = config.dataset_dir / "train";
  return LoadDataset(std::filesystem::exists(train) ? train
                                                    : config.dataset_dir);
}

std::vector<TargetSpec> ResolveTargets(const ExperimentConfig& config,
                                       const InteractionDataset& dataset) {
  const std::string& text = config.targets;
  const auto colon = text.find(':');
  std::vector<TargetSpec> sets;
  if (colon == std::string::npos) {
    for (const auto& group : SplitList(text, ';')) {
      TargetSpec spec;
      for (const auto& item : SplitList(group, ',')) {
        spec.items.push_back(static_cast<NodeIndex>(ParseInt(item, "targets")));
      }
      std::sort(spec.items.begin(), spec.items.end());
      sets.push_back(std::move(spec));
    }
  } else {
    const std::string mode = text.substr(0, colon);
    const std::string shape = text.substr(colon + 1);
    const auto x = shape.find('x');
    if (x == std::string::npos) {
      throw Error(ErrorKind::kArgument,
                  "targets: expected MODE:COUNTxREPEATS, got " + text);
    }
    const auto count = ParseInt(shape.substr(0, x), "targets count");
    const auto repeats = ParseInt(shape.substr(x + 1), "targets repeats");
    if (count < 1 || repeats < 1) {
      throw Error(ErrorKind::kArgument, "targets: counts must be positive");
    }
    std::vector<NodeIndex> pool;
    if (mode == "random") {
      for (std::size_t i = 0; i < dataset.n_items(); ++i) {
        pool.push_back(static_cast<NodeIndex>(i));
      }
    } else if (mode == "unpopular") {
      // Least interacted quarter of the items that have any interaction.
      for (std::size_t i = 0; i < dataset.n_items(); ++i) {
        if (dataset.ItemDegree(static_cast<NodeIndex>(i)) > 0) {
          pool.push_back(static_cast<NodeIndex>(i));
        }
      }
      std::stable_sort(pool.begin(), pool.end(),
                       [&](NodeIndex a, NodeIndex b) {
                         return dataset.ItemDegree(a) < dataset.ItemDegree(b);
                       });
      const std::size_t keep =
          std::max<std::size_t>(static_cast<std::size_t>(count),
                                (pool.size() + 3) / 4);
      pool.resize(std::min(pool.size(), keep));
    } else {
      throw Error(ErrorKind::kArgument, "targets: unknown mode " + mode);
    }
    Rng rng(DeriveSeed(config.seed, "targets"));
    sets = SampleTargetSets(std::move(pool), static_cast<std::size_t>(count),
                            static_cast<std::size_t>(repeats), rng);
  }
  if (sets.empty()) throw Error(ErrorKind::kArgument, "targets: no target sets");
  for (const auto& spec : sets) spec.Validate(dataset.n_items());
  return sets;
}

AttackBudget ResolveBudget(const ExperimentConfig& config,
                           const InteractionDataset& dataset) {
  AttackBudget budget = DefaultBudget(dataset);
  if (config.n_fake > 0) budget.n_fake = config.n_fake;
  if (config.tau > 0) budget.tau = config.tau;
  return budget;
}

FakeInteractions RunAttack(const ExperimentConfig& config,
                           const InteractionDataset& dataset,
                           const TargetSpec& targets, std::size_t target_set,
                           AttackTrace* trace) {
  const AttackBudget budget = ResolveBudget(config, dataset);
  const std::uint64_t seed = DeriveSeed(config.seed, "attack", target_set);
  switch (config.attack) {
    case AttackKind::kNone:
      return FakeInteractions{budget.tau, {}};
    case AttackKind::kRandom:
      return HeuristicAttack(HeuristicKind::kRandom, dataset, targets, budget,
                             seed);
    case AttackKind::kBandwagon:
      return HeuristicAttack(HeuristicKind::kBandwagon, dataset, targets,
                             budget, seed);
    case AttackKind::kDpa2dl: {
      std::optional<GpConfig> gp;
      if (config.gp_enabled) gp = config.gp;
      return Dpa2dlGpAttack(dataset, targets, budget, config.surrogate, gp,
                            seed, std::nullopt, trace);
    }
  }
  throw Error(ErrorKind::kArgument, "unknown attack kind");
}

MetricsReport EvaluateFakeSets(const ExperimentConfig& config,
                               const InteractionDataset& dataset,
                               std::span<const TargetSpec> target_sets,
                               std::span<const FakeInteractions> fakes) {
  if (target_sets.size() != fakes.size()) {
    throw Error(ErrorKind::kArgument, "one fake set per target set expected");
  }
  MetricsReport report;
  for (std::size_t t = 0; t < target_sets.size(); ++t) {
    const InteractionDataset poisoned = InjectFake(dataset, fakes[t]);
    MetricsReport part = EvaluateAttack(poisoned, config.victims,
                                        target_sets.subspan(t, 1), config.k,
                                        config.eval_seeds);
    for (auto& record : part.records) {
      record.target_set = t;
      report.records.push_back(std::move(record));
    }
  }
  // Order by (victim, seed, target set).
  const auto victim_rank = [&](const std::string& tag) {
    for (std::size_t v = 0; v < config.victims.size(); ++v) {
      if (config.victims[v].tag == tag) return v;
    }
    return config.victims.size();
  };
  const auto seed_rank = [&](std::uint64_t seed) {
    return static_cast<std::size_t>(
        std::find(config.eval_seeds.begin(), config.eval_seeds.end(), seed) -
        config.eval_seeds.begin());
  };
  std::stable_sort(report.records.begin(), report.records.end(),
                   [&](const MetricRecord& a, const MetricRecord& b) {
                     const auto ka = std::make_tuple(
                         victim_rank(a.victim), seed_rank(a.seed),
                         a.target_set);
                     const auto kb = std::make_tuple(
                         victim_rank(b.victim), seed_rank(b.seed),
                         b.target_set);
                     return ka < kb;
                   });
  report.aggregates = AggregateRecords(report.records);
  return report;
}

MetricsReport RunAttackExperiment(const ExperimentConfig& config,
                                  const InteractionDataset& dataset,
                                  std::span<const TargetSpec> target_sets) {
  std::vector<FakeInteractions> fakes;
  for (std::size_t t = 0; t < target_sets.size(); ++t) {
    fakes.push_back(RunAttack(config, dataset, target_sets[t], t));
  }
  return EvaluateFakeSets(config, dataset, target_sets, fakes);
}

double MeanRecall(const MetricsReport& report) {
  if (report.records.empty()) {
    throw Error(ErrorKind::kUndefinedMetric, "empty metrics report");
  }
  double sum = 0.0;
  for (const auto& r : report.records) sum += r.recall_at_k;
  return sum / static_cast<double>(report.records.size());
}

// Analyses -----------------------------------------------------------------

std::vector<JaccardRow> JaccardVersusEpochs(const InteractionDataset& dataset,
                                            const TrainConfig& victim,
                                            int victim_epochs,
                                            const TrainConfig& surrogate,
                                            const TrainConfig& gp_surrogate,
                                            const GpConfig& gp,
                                            std::span<const int> epochs,
                                            std::size_t k, std::uint64_t seed) {
  std::vector<int> sorted(epochs.begin(), epochs.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty() || sorted.front() < 0) {
    throw Error(ErrorKind::kArgument, "epoch list must be non-negative");
  }
  const std::vector<NodeIndex> users = RealUsers(dataset);

  TrainConfig victim_cfg = victim;
  victim_cfg.seed = DeriveSeed(seed, "victim");
  EmbeddingTable victim_model = InitEmbeddings(
      dataset.n_users(), dataset.n_items(), victim_cfg.dim, victim_cfg.seed);
  Train(victim_model, dataset, victim_cfg, {}, victim_epochs);
  const std::vector<TopKList> reference =
      TopKForUsers(victim_model, dataset, users, k);

  TrainConfig plain_cfg = surrogate;
  TrainConfig gp_cfg = gp_surrogate;
  plain_cfg.seed = gp_cfg.seed = DeriveSeed(seed, "surrogate");
  EmbeddingTable plain = InitEmbeddings(dataset.n_users(), dataset.n_items(),
                                        plain_cfg.dim, plain_cfg.seed);
  EmbeddingTable with_gp = InitEmbeddings(
      dataset.n_users(), dataset.n_items(), gp_cfg.dim, gp_cfg.seed);
  TrainHooks gp_hooks;
  gp_hooks.gp = &gp;

  std::vector<JaccardRow> rows;
  int done = 0;
  for (int target : sorted) {
    if (target > done) {
      Train(plain, dataset, plain_cfg, {}, target - done, done);
      Train(with_gp, dataset, gp_cfg, gp_hooks, target - done, done);
      done = target;
    }
    JaccardRow row;
    row.epochs = target;
    row.plain = JaccardTopKSimilarity(
        TopKForUsers(plain, dataset, users, k), reference);
    row.gp = JaccardTopKSimilarity(
        TopKForUsers(with_gp, dataset, users, k), reference);
    rows.push_back(row);
  }
  return rows;
}

std::string JaccardCsv(std::span<const JaccardRow> rows) {
  std::string out = "epochs,jaccard_plain,jaccard_gp\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epochs) + "," + FormatDouble(r.plain) + "," +
           FormatDouble(r.gp) + "\n";
  }
  return out;
}

std::vector<GradientCosineRow> GradientCosineCurve(
    const InteractionDataset& dataset, const TrainConfig& train, int epochs,
    std::uint64_t seed) {
  TrainConfig cfg = train;
  cfg.seed = DeriveSeed(seed, "train");
  EmbeddingTable model =
      InitEmbeddings(dataset.n_users(), dataset.n_items(), cfg.dim, cfg.seed);
  const auto pairs =
      SampleRandomPairs(dataset, dataset.nnz(), DeriveSeed(seed, "pairs"));
  std::vector<GradientCosineRow> rows;
  for (int e = 0; e < epochs; ++e) {
    GradientBuffer sum = GradientBuffer::ZerosLike(model);
    TrainHooks hooks;
    hooks.gradient_sum = &sum;
    Train(model, dataset, cfg, hooks, 1, e);
    rows.push_back({e + 1, GradientPairCosine(dataset, sum, pairs)});
  }
  return rows;
}

std::vector<SweepRow> HyperparameterSweep(const ExperimentConfig& config,
                                          const InteractionDataset& dataset,
                                          std::span<const TargetSpec> targets,
                                          const SweepGrid& grid) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double xi_odd : grid.xi_odd) {
    for (double xi_even : grid.xi_even) {
      for (double alpha_odd : grid.alpha_odd) {
        for (double alpha_even : grid.alpha_even) {
          ExperimentConfig point = config;
          point.attack = AttackKind::kDpa2dl;
          point.gp_enabled = true;
          point.gp.xi_odd = xi_odd;
          point.gp.xi_even = xi_even;
          point.gp.alpha_odd = alpha_odd;
          point.gp.alpha_even = alpha_even;
          point.gp.Validate();
          rows.push_back({xi_odd, xi_even, alpha_odd, alpha_even,
                          MeanRecall(RunAttackExperiment(point, dataset,
                                                         targets))});
        }
      }
    }
  }
  return rows;
}

std::string SweepCsv(std::span<const SweepRow> rows) {
  std::string out = "xi_odd,xi_even,alpha_odd,alpha_even,mean_recall\n";
  for (const auto& r : rows) {
    out += FormatDouble(r.xi_odd) + "," + FormatDouble(r.xi_even) + "," +
           FormatDouble(r.alpha_odd) + "," + FormatDouble(r.alpha_even) + "," +
           FormatDouble(r.mean_recall) + "\n";
  }
  return out;
}

}  // namespace gpatk

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

#ifndef GPATK_EXPERIMENT_H_
#define GPATK_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpatk/attack.h"
#include "gpatk/data.h"
#include "gpatk/eval.h"
#include "gpatk/gpengine.h"
#include "gpatk/recmodel.h"

namespace gpatk {

// Flat `key = value` text; `#` starts a comment. Keys are dotted paths.
class FlatConfig {
 public:
  static FlatConfig Parse(std::istream& in, const std::string& source = "");
  static FlatConfig Load(const std::filesystem::path& path);

  void Set(const std::string& key, const std::string& value);
  bool Has(const std::string& key) const;
  std::optional<std::string> Get(const std::string& key) const;

  std::string GetString(const std::string& key,
                        const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  // Sorted "key=value\n" lines and their FNV-1a 64 digest in hex.
  // output.dir is left out so that relocated reruns hash equally.
  std::string Canonical() const;
  std::string Hash() const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

double ParseDouble(const std::string& text, const std::string& what);
std::int64_t ParseInt(const std::string& text, const std::string& what);
std::vector<std::string> SplitList(const std::string& text, char sep);

enum class AttackKind { kNone, kRandom, kBandwagon, kDpa2dl };
std::optional<AttackKind> ParseAttackKind(const std::string& name);
std::string AttackKindName(AttackKind kind);

struct SweepGrid {
  std::vector<double> xi_odd;
  std::vector<double> xi_even;
  std::vector<double> alpha_odd;
  std::vector<double> alpha_even;

  std::size_t size() const {
    return xi_odd.size() * xi_even.size() * alpha_odd.size() *
           alpha_even.size();
  }
};

// xi in {-inf, 0, +inf}, alpha in {0.1, 1, 10, 100, 1000} on every axis.
SweepGrid DefaultSweepGrid();

struct PrepareOptions {
  std::filesystem::path input;
  IngestOptions ingest;
  int min_interactions = 15;
  double train_ratio = 0.8;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string hash;

  // A prepared dataset directory, or a generated clustered fixture.
  std::filesystem::path dataset_dir;
  bool synthetic = false;
  ClusteredFixtureOptions fixture;
  PrepareOptions prepare;

  SurrogateConfig surrogate;
  // GP-trained surrogate in the Jaccard analysis; defaults to surrogate.*.
  TrainConfig gp_surrogate;
  std::vector<VictimConfig> victims;
  bool gp_enabled = false;
  GpConfig gp;

  AttackKind attack = AttackKind::kDpa2dl;
  // Zero means the dataset-derived default.
  std::size_t n_fake = 0;
  std::size_t tau = 0;
  // "3,7;12" (item indices, sets separated by ';'), "random:CxR" or
  // "unpopular:CxR" (R sets of C items).
  std::string targets = "random:1x1";

  std::size_t k = 50;
  std::vector<std::uint64_t> eval_seeds{0};

  std::vector<int> analyze_epochs{1, 5, 10};
  std::size_t analyze_k = 10;
  int analyze_victim_epochs = 500;
  int cosine_epochs = 10;

  SweepGrid sweep;

  std::filesystem::path out_dir = "out";

  static ExperimentConfig FromFlat(const FlatConfig& flat);
};

TrainConfig ParseTrainConfig(const FlatConfig& flat, const std::string& prefix,
                             TrainConfig defaults);
GpConfig ParseGpConfig(const FlatConfig& flat, GpConfig defaults = {});

struct PrepareSummary {
  std::size_t raw_lines = 0;
  std::size_t malformed = 0;
  std::size_t filtered = 0;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_interactions = 0;
  std::size_t train_nnz = 0;
  std::size_t validation_nnz = 0;
};

// Ingest (or generate), dedup, k-core, chronological split.
struct PreparedData {
  SplitDataset split;
  PrepareSummary summary;
};
PreparedData PrepareData(const ExperimentConfig& config);

// Writes train/ and validation/ datasets plus meta.json.
PrepareSummary PrepareAndSave(const ExperimentConfig& config,
                              const std::filesystem::path& out);

// The training split the experiment runs on.
InteractionDataset LoadExperimentDataset(const ExperimentConfig& config);

std::vector<TargetSpec> ResolveTargets(const ExperimentConfig& config,
                                       const InteractionDataset& dataset);

AttackBudget ResolveBudget(const ExperimentConfig& config,
                           const InteractionDataset& dataset);

// Fake rows for one target set; kNone yields no rows.
FakeInteractions RunAttack(const ExperimentConfig& config,
                           const InteractionDataset& dataset,
                           const TargetSpec& targets, std::size_t target_set,
                           AttackTrace* trace = nullptr);

// Attack then evaluate every target set; records carry the set index.
MetricsReport RunAttackExperiment(const ExperimentConfig& config,
                                  const InteractionDataset& dataset,
                                  std::span<const TargetSpec> target_sets);

// Evaluates already generated fake rows, one per target set.
MetricsReport EvaluateFakeSets(const ExperimentConfig& config,
                               const InteractionDataset& dataset,
                               std::span<const TargetSpec> target_sets,
                               std::span<const FakeInteractions> fakes);

double MeanRecall(const MetricsReport& report);

struct JaccardRow {
  int epochs = 0;
  double plain = 0.0;
  double gp = 0.0;
};

// Jaccard@k between a victim trained for victim_epochs and surrogates
// trained for each listed epoch count, without and with GP. Both
// surrogates draw their initialization from the same seed.
std::vector<JaccardRow> JaccardVersusEpochs(const InteractionDataset& dataset,
                                            const TrainConfig& victim,
                                            int victim_epochs,
                                            const TrainConfig& surrogate,
                                            const TrainConfig& gp_surrogate,
                                            const GpConfig& gp,
                                            std::span<const int> epochs,
                                            std::size_t k, std::uint64_t seed);
std::string JaccardCsv(std::span<const JaccardRow> rows);

// Per-epoch cosine statistics of epoch-summed gradients; random pairs are
// drawn once per call.
std::vector<GradientCosineRow> GradientCosineCurve(
    const InteractionDataset& dataset, const TrainConfig& train, int epochs,
    std::uint64_t seed);

struct SweepRow {
  double xi_odd = 0.0;
  double xi_even = 0.0;
  double alpha_odd = 0.0;
  double alpha_even = 0.0;
  double mean_recall = 0.0;
};

// One DPA2DL+GP attack/evaluation per grid point.
std::vector<SweepRow> HyperparameterSweep(const ExperimentConfig& config,
                                          const InteractionDataset& dataset,
                                          std::span<const TargetSpec> targets,
                                          const SweepGrid& grid);
std::string SweepCsv(std::span<const SweepRow> rows);

}  // namespace gpatk

#endif  // GPATK_EXPERIMENT_H_

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

#include "cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <utility>

#include "gpatk/attack.h"
#include "gpatk/data.h"
#include "gpatk/error.h"
#include "gpatk/eval.h"
#include "gpatk/experiment.h"
#include "gpatk/gpengine.h"
#include "gpatk/recmodel.h"
#include "gpatk/verification.h"

namespace gpatk::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Overrides = std::vector<std::pair<std::string, std::string>>;

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string NormalizeKey(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

// Pulls `--a.b=value` and `--a.b value` out of argv; they become config
// overrides. Everything else is left for the parser.
std::vector<std::string> ExtractDottedOverrides(
    const std::vector<std::string>& args, Overrides& overrides) {
  std::vector<std::string> rest;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string& arg = args[k];
    if (arg.rfind("--", 0) != 0) {
      rest.push_back(arg);
      continue;
    }
    const auto eq = arg.find('=');
    const std::string name = arg.substr(2, eq == std::string::npos
                                               ? std::string::npos
                                               : eq - 2);
    if (name.find('.') == std::string::npos) {
      rest.push_back(arg);
      continue;
    }
    if (eq != std::string::npos) {
      overrides.emplace_back(NormalizeKey(name), arg.substr(eq + 1));
    } else if (k + 1 < args.size()) {
      overrides.emplace_back(NormalizeKey(name), args[++k]);
    } else {
      throw CLI::ArgumentMismatch("--" + name + " requires a value");
    }
  }
  return rest;
}

void AddOverride(CLI::App* app, const std::string& flag,
                 const std::string& key, Overrides& overrides,
                 const std::string& help) {
  app->add_option_function<std::string>(
      flag,
      [&overrides, key](const std::string& value) {
        overrides.emplace_back(key, value);
      },
      help);
}

struct Context {
  ExperimentConfig config;
  fs::path out;
};

Context BuildContext(const std::string& config_path,
                     const Overrides& overrides,
                     const std::optional<std::int64_t>& seed,
                     const std::string& out) {
  FlatConfig flat;
  if (!config_path.empty()) flat = FlatConfig::Load(config_path);
  for (const auto& [key, value] : overrides) flat.Set(key, value);
  if (seed) flat.Set("seed", std::to_string(*seed));
  if (!out.empty()) flat.Set("output.dir", out);
  Context ctx{ExperimentConfig::FromFlat(flat), {}};
  ctx.out = ctx.config.out_dir;
  return ctx;
}

Json Provenance(const ExperimentConfig& config) {
  Json json;
  json["config_hash"] = config.hash;
  json["seed"] = config.seed;
  return json;
}

Json GpJson(const GpConfig& gp) {
  Json json;
  json["layers"] = gp.layers;
  json["xi_odd"] = FormatDouble(gp.xi_odd);
  json["xi_even"] = FormatDouble(gp.xi_even);
  json["alpha_odd"] = gp.alpha_odd;
  json["alpha_even"] = gp.alpha_even;
  json["apply_probability"] = gp.apply_probability;
  return json;
}

int RunPrepare(const Context& ctx, std::ostream& out) {
  const PrepareSummary s = PrepareAndSave(ctx.config, ctx.out);
  out << "prepared " << s.n_users << " users, " << s.n_items << " items, "
      << s.n_interactions << " interactions (train " << s.train_nnz
      << ", validation " << s.validation_nnz << ") in " << ctx.out.string()
      << "\n";
  return kExitOk;
}

int RunTrain(const Context& ctx, const std::string& model,
             std::ostream& out) {
  const ExperimentConfig& config = ctx.config;
  const InteractionDataset dataset = LoadExperimentDataset(config);
  TrainConfig train;
  if (model == "surrogate") {
    train = config.surrogate.train;
  } else {
    const auto it = std::find_if(
        config.victims.begin(), config.victims.end(),
        [&](const VictimConfig& v) { return v.tag == model; });
    if (it == config.victims.end()) {
      throw Error(ErrorKind::kArgument, "unknown model " + model);
    }
    train = it->train;
  }
  train.seed = config.seed;
  const bool use_gp = config.gp_enabled && train.loss == LossKind::kBce;
  TrainHooks hooks;
  if (use_gp) hooks.gp = &config.gp;

  EmbeddingTable embeddings = InitEmbeddings(
      dataset.n_users(), dataset.n_items(), train.dim, train.seed);
  std::string log = "epoch,mean_loss\n";
  double seconds = 0.0;
  std::size_t gp_applications = 0;
  Train(embeddings, dataset, train, hooks, -1, 0,
        [&](int epoch, const EpochStats& stats) {
          log += std::to_string(epoch + 1) + "," +
                 FormatDouble(stats.mean_loss) + "\n";
          seconds += stats.seconds;
          gp_applications += stats.gp_applications;
        });
  fs::create_directories(ctx.out);
  SaveCheckpoint(embeddings, ctx.out / "model.ckpt");
  WriteTextFile(ctx.out / "epoch_log.csv", log);

  Json meta = Provenance(config);
  meta["model"] = model;
  meta["loss"] = train.loss == LossKind::kBce ? "bce" : "bpr";
  meta["epochs"] = train.epochs;
  meta["n_users"] = dataset.n_users();
  meta["n_items"] = dataset.n_items();
  meta["dim"] = train.dim;
  meta["seconds"] = seconds;
  if (use_gp) {
    meta["gp"] = GpJson(config.gp);
    meta["gp_applications"] = gp_applications;
    const GradientBuffer gradient = GradientViaMessagePassing(
        embeddings, dataset, train.neg_weight, MessagePassingMode::kFactored);
    const GpAdjacencyPair pair =
        BuildGpAdjacencyPair(embeddings, gradient, dataset, config.gp);
    meta["gp_adjacency"]["odd_edges"] = pair.odd.edge_count();
    meta["gp_adjacency"]["even_edges"] = pair.even.edge_count();
  }
  WriteTextFile(ctx.out / "train_meta.json", meta.dump(2) + "\n");
  out << "trained " << model << " for " << train.epochs << " epochs -> "
      << (ctx.out / "model.ckpt").string() << "\n";
  return kExitOk;
}

fs::path FakeEdgesPath(const fs::path& dir, std::size_t set,
                       std::size_t set_count) {
  if (set_count == 1) return dir / "fake_edges.tsv";
  return dir / ("set_" + std::to_string(set)) / "fake_edges.tsv";
}

int RunAttackCommand(const Context& ctx, std::ostream& out) {
  const ExperimentConfig& config = ctx.config;
  const InteractionDataset dataset = LoadExperimentDataset(config);
  const std::vector<TargetSpec> targets = ResolveTargets(config, dataset);
  const AttackBudget budget = ResolveBudget(config, dataset);

  Json meta = Provenance(config);
  meta["attack"] = AttackKindName(config.attack);
  meta["n_fake"] = budget.n_fake;
  meta["tau"] = budget.tau;
  meta["gp_enabled"] = config.gp_enabled;
  if (config.gp_enabled) meta["gp"] = GpJson(config.gp);
  meta["target_sets"] = Json::array();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    AttackTrace trace;
    const FakeInteractions fake = RunAttack(config, dataset, targets[t], t,
                                            &trace);
    const fs::path path = FakeEdgesPath(ctx.out, t, targets.size());
    fs::create_directories(path.parent_path());
    SaveFakeInteractions(fake, path);
    Json set;
    set["index"] = t;
    set["items"] = targets[t].items;
    set["file"] = fs::relative(path, ctx.out).generic_string();
    set["fake_users"] = fake.n_fake();
    set["fake_interactions"] = fake.nnz();
    set["gp_applications"] = trace.gp_applications;
    double seconds = 0.0;
    for (double s : trace.retrain_seconds) seconds += s;
    set["retrain_seconds"] = seconds;
    meta["target_sets"].push_back(std::move(set));
  }
  WriteTextFile(ctx.out / "attack_meta.json", meta.dump(2) + "\n");
  out << "attack " << AttackKindName(config.attack) << ": " << targets.size()
      << " target set(s), " << budget.n_fake << " fake users each -> "
      << ctx.out.string() << "\n";
  return kExitOk;
}

int RunEvaluate(const Context& ctx, const std::string& attack_dir,
                std::ostream& out) {
  const ExperimentConfig& config = ctx.config;
  const InteractionDataset dataset = LoadExperimentDataset(config);
  const std::vector<TargetSpec> targets = ResolveTargets(config, dataset);
  MetricsReport report;
  if (attack_dir.empty()) {
    report = RunAttackExperiment(config, dataset, targets);
  } else {
    const AttackBudget budget = ResolveBudget(config, dataset);
    std::vector<FakeInteractions> fakes;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const fs::path path = FakeEdgesPath(attack_dir, t, targets.size());
      if (!fs::exists(path)) {
        throw Error(ErrorKind::kIo, "fake edges not found: " + path.string());
      }
      fakes.push_back(LoadFakeInteractions(path, budget.tau));
    }
    report = EvaluateFakeSets(config, dataset, targets, fakes);
  }
  fs::create_directories(ctx.out);
  WriteTextFile(ctx.out / "report.json",
                MetricsReportJson(report, config.hash, config.seed));
  WriteTextFile(ctx.out / "report.csv", MetricsReportCsv(report));
  for (const auto& a : report.aggregates) {
    out << a.victim << ": HR@" << config.k << " " << FormatDouble(a.hr_mean)
        << " +- " << FormatDouble(a.hr_std) << ", Recall@" << config.k << " "
        << FormatDouble(a.recall_mean) << " +- " << FormatDouble(a.recall_std)
        << "\n";
  }
  return kExitOk;
}

int RunAnalyze(const Context& ctx, const std::string& kind,
               std::ostream& out) {
  const ExperimentConfig& config = ctx.config;
  const InteractionDataset dataset = LoadExperimentDataset(config);
  fs::create_directories(ctx.out);
  Json meta = Provenance(config);
  meta["kind"] = kind;
  if (kind == "cosine" || kind == "figures") {
    const auto rows = GradientCosineCurve(dataset, config.surrogate.train,
                                          config.cosine_epochs, config.seed);
    WriteTextFile(ctx.out / "gradient_cosine.csv", GradientCosineCsv(rows));
    out << "wrote " << (ctx.out / "gradient_cosine.csv").string() << "\n";
  }
  if (kind == "jaccard" || kind == "figures") {
    const auto rows = JaccardVersusEpochs(
        dataset, config.victims.front().train, config.analyze_victim_epochs,
        config.surrogate.train, config.gp_surrogate, config.gp,
        config.analyze_epochs,
        config.analyze_k, config.seed);
    WriteTextFile(ctx.out / "jaccard_epochs.csv", JaccardCsv(rows));
    out << "wrote " << (ctx.out / "jaccard_epochs.csv").string() << "\n";
  }
  if (kind == "sweep") {
    const std::vector<TargetSpec> targets = ResolveTargets(config, dataset);
    const auto rows =
        HyperparameterSweep(config, dataset, targets, config.sweep);
    WriteTextFile(ctx.out / "sweep.csv", SweepCsv(rows));
    meta["grid_points"] = rows.size();
    out << "wrote " << (ctx.out / "sweep.csv").string() << "\n";
  }
  WriteTextFile(ctx.out / "analyze_meta.json", meta.dump(2) + "\n");
  return kExitOk;
}

int RunOracle(const std::string& suite, int instances, std::uint64_t seed,
              std::ostream& out) {
  std::vector<SuiteResult> results;
  const auto count = [&](int fallback) {
    return instances > 0 ? instances : fallback;
  };
  if (suite == "message-passing" || suite == "all") {
    results.push_back(RunMessagePassingSuite(count(20), seed));
  }
  if (suite == "two-step" || suite == "all") {
    results.push_back(RunTwoStepSuite(count(10), seed));
  }
  if (suite == "fd" || suite == "all") {
    for (auto& r : RunFiniteDifferenceSuites(count(20), seed)) {
      results.push_back(std::move(r));
    }
  }
  out << SuiteResultsJson(results);
  const bool passed = std::all_of(results.begin(), results.end(),
                                  [](const SuiteResult& r) { return r.passed; });
  return passed ? kExitOk : kExitDomain;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Gradient-passing poisoning attack toolkit", "gpatk"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::int64_t> seed;
  std::string out_dir;
  Overrides overrides;
  app.add_option("--config", config_path, "Experiment config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option_function<std::vector<std::string>>(
      "--set",
      [&overrides](const std::vector<std::string>& items) {
        for (const auto& item : items) {
          const auto eq = item.find('=');
          if (eq == std::string::npos || eq == 0) {
            throw CLI::ValidationError("--set", "expected key=value");
          }
          overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
        }
      },
      "Config override key=value (repeatable)");

  CLI::App* prepare = app.add_subcommand(
      "prepare", "Ingest, k-core filter, split and persist a dataset");
  AddOverride(prepare, "--input", "prepare.input", overrides,
              "Raw interaction file");
  AddOverride(prepare, "--format", "prepare.format", overrides,
              "tsv, csv or gowalla");
  AddOverride(prepare, "--min-interactions", "prepare.min_interactions",
              overrides, "k-core threshold");
  AddOverride(prepare, "--train-ratio", "prepare.train_ratio", overrides,
              "Per-user chronological train fraction");
  AddOverride(prepare, "--min-rating", "prepare.min_rating", overrides,
              "Keep records whose 4th column exceeds this rating");
  AddOverride(prepare, "--event-type", "prepare.event_type", overrides,
              "Keep records whose 4th column equals this event");

  CLI::App* train = app.add_subcommand("train", "Train a model and checkpoint");
  std::string model = "surrogate";
  train->add_option("--model", model, "surrogate or a victim tag");

  CLI::App* attack = app.add_subcommand("attack", "Generate fake users");
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Retrain victims on poisoned data and report metrics");
  for (CLI::App* sub : {attack, evaluate}) {
    AddOverride(sub, "--kind", "attack.kind", overrides,
                "none, random, bandwagon or dpa2dl");
    AddOverride(sub, "--targets", "targets", overrides, "Target sets");
    AddOverride(sub, "--n-fake", "attack.n_fake", overrides,
                "Number of fake users");
    AddOverride(sub, "--tau", "attack.tau", overrides,
                "Interactions per fake user");
    sub->add_flag_callback(
        "--gp", [&overrides] { overrides.emplace_back("gp.enabled", "true"); },
        "Enable gradient passing in the surrogate");
  }
  AddOverride(evaluate, "--k", "eval.k", overrides, "Top-k cutoff");
  std::string attack_dir;
  evaluate->add_option("--attack-dir", attack_dir,
                       "Use fake edges written by `attack`");

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Gradient-cosine, Jaccard-vs-epoch and sweep analyses");
  std::string analyze_kind = "figures";
  analyze->add_option("--kind", analyze_kind, "figures, cosine, jaccard, sweep")
      ->check(CLI::IsMember({"figures", "cosine", "jaccard", "sweep"}));
  AddOverride(analyze, "--k", "analyze.k", overrides, "Top-k cutoff");

  CLI::App* oracle = app.add_subcommand("oracle", "Run verification oracles");
  std::string suite = "all";
  int instances = 0;
  oracle->add_option("--suite", suite, "message-passing, two-step, fd or all")
      ->check(CLI::IsMember({"message-passing", "two-step", "fd", "all"}));
  oracle->add_option("--seeds", instances, "Instances per suite")
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> rest = ExtractDottedOverrides(args, overrides);
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (oracle->parsed()) {
      return RunOracle(suite, instances,
                       static_cast<std::uint64_t>(seed.value_or(0)), out);
    }
    const Context ctx = BuildContext(config_path, overrides, seed, out_dir);
    if (prepare->parsed()) return RunPrepare(ctx, out);
    if (train->parsed()) return RunTrain(ctx, model, out);
    if (attack->parsed()) return RunAttackCommand(ctx, out);
    if (evaluate->parsed()) return RunEvaluate(ctx, attack_dir, out);
    if (analyze->parsed()) return RunAnalyze(ctx, analyze_kind, out);
  } catch (const Error& e) {
    err << "gpatk: " << e.what() << "\n";
    return e.kind() == ErrorKind::kUsage ? kExitUsage : kExitDomain;
  } catch (const std::exception& e) {
    err << "gpatk: " << e.what() << "\n";
    return kExitDomain;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace gpatk::cli

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

#include "gpatk/verification.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <nlohmann/json.hpp>

#include "gpatk/attack.h"
#include "gpatk/error.h"
#include "gpatk/gpengine.h"
#include "gpatk/random.h"
#include "gpatk/recmodel.h"

namespace gpatk {
namespace {

class Timer {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

void Finish(SuiteResult& result, const Timer& timer, bool below) {
  result.seconds = timer.Seconds();
  result.passed = !result.values.empty();
  for (double v : result.values) {
    if (!(below ? v < result.threshold : v <= result.threshold)) {
      result.passed = false;
    }
  }
}

}  // namespace

RandomInstance MakeRandomInstance(std::size_t n_users, std::size_t n_items,
                                  std::size_t dim, double density,
                                  double scale, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "instance"));
  std::vector<InteractionDataset::Edge> edges;
  for (std::size_t u = 0; u < n_users; ++u) {
    for (std::size_t i = 0; i < n_items; ++i) {
      if (UniformUnit(rng) < density) {
        edges.emplace_back(static_cast<NodeIndex>(u), static_cast<NodeIndex>(i));
      }
    }
  }
  RandomInstance instance{
      InteractionDataset::FromEdges(n_users, n_items, edges, n_users),
      EmbeddingTable(n_users, n_items, dim)};
  double* data = instance.embeddings.values().data();
  for (Eigen::Index k = 0; k < instance.embeddings.values().size(); ++k) {
    data[k] = scale * (2.0 * UniformUnit(rng) - 1.0);
  }
  return instance;
}

GradientBuffer FiniteDifferenceGradient(
    const std::function<double(const EmbeddingTable&)>& loss,
    const EmbeddingTable& at, double step) {
  GradientBuffer grad = GradientBuffer::ZerosLike(at);
  EmbeddingTable probe = at;
  for (Eigen::Index r = 0; r < probe.values().rows(); ++r) {
    for (Eigen::Index c = 0; c < probe.values().cols(); ++c) {
      const double original = probe.values()(r, c);
      probe.values()(r, c) = original + step;
      const double up = loss(probe);
      probe.values()(r, c) = original - step;
      const double down = loss(probe);
      probe.values()(r, c) = original;
      grad.values()(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

double RelativeError(const Matrix& a, const Matrix& b) {
  return (a - b).norm() /
         std::max(b.norm(), std::numeric_limits<double>::min());
}

SuiteResult RunMessagePassingSuite(int instances, std::uint64_t seed) {
  const Timer timer;
  SuiteResult result{"message_passing", {}, 1e-12};
  Rng rng(DeriveSeed(seed, "message-passing"));
  for (int k = 0; k < instances; ++k) {
    const std::size_t n = 1 + UniformIndex(rng, 8);
    const std::size_t m = 1 + UniformIndex(rng, 8);
    const std::size_t d = 1 + UniformIndex(rng, 4);
    const double beta = 0.5 + 1.5 * UniformUnit(rng);
    const RandomInstance inst =
        MakeRandomInstance(n, m, d, 0.4, 1.0, DeriveSeed(seed, "message-passing", k));
    const GradientBuffer via_mp =
        GradientViaMessagePassing(inst.embeddings, inst.dataset, beta);
    const GradientBuffer direct =
        AnalyticBceGradient(inst.embeddings, inst.dataset, beta);
    result.values.push_back(
        (via_mp.values() - direct.values()).cwiseAbs().maxCoeff());
  }
  Finish(result, timer, false);
  return result;
}

SuiteResult RunTwoStepSuite(int instances, std::uint64_t seed) {
  const Timer timer;
  SuiteResult result{"two_step", {}, 1e-8};
  constexpr std::size_t kSizes[] = {2, 3, 4};
  std::uint64_t attempt = 0;
  for (int k = 0; k < instances; ++k) {
    const std::size_t n = kSizes[static_cast<std::size_t>(k) % 3];
    while (true) {
      const RandomInstance inst = MakeRandomInstance(
          n, n, 2, 0.5, 1.0, DeriveSeed(seed, "two-step", attempt++));
      try {
        result.values.push_back(
            ExactGpTwoStepOracle(inst.embeddings, inst.dataset, 0.01, 1.0)
                .residual);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kSingular) throw;
      }
    }
  }
  Finish(result, timer, true);
  return result;
}

std::vector<SuiteResult> RunFiniteDifferenceSuites(int instances,
                                                   std::uint64_t seed) {
  std::vector<SuiteResult> results;
  Rng rng(DeriveSeed(seed, "fd"));
  {
    const Timer timer;
    SuiteResult bce{"fd_bce", {}, 1e-6};
    for (int k = 0; k < instances; ++k) {
      const std::size_t n = 2 + UniformIndex(rng, 4);
      const std::size_t m = 2 + UniformIndex(rng, 4);
      const RandomInstance inst =
          MakeRandomInstance(n, m, 2, 0.4, 1.0, DeriveSeed(seed, "fd-bce", k));
      const double beta = 0.5 + UniformUnit(rng);
      const auto loss = [&](const EmbeddingTable& r) {
        return BceLoss(r, inst.dataset, beta);
      };
      bce.values.push_back(RelativeError(
          AnalyticBceGradient(inst.embeddings, inst.dataset, beta).values(),
          FiniteDifferenceGradient(loss, inst.embeddings).values()));
    }
    Finish(bce, timer, true);
    results.push_back(std::move(bce));
  }
  {
    const Timer timer;
    SuiteResult bpr{"fd_bpr_triple", {}, 1e-6};
    for (int k = 0; k < instances; ++k) {
      const RandomInstance inst =
          MakeRandomInstance(3, 4, 3, 0.0, 1.0, DeriveSeed(seed, "fd-bpr", k));
      const auto u = static_cast<NodeIndex>(UniformIndex(rng, 3));
      const auto i = static_cast<NodeIndex>(UniformIndex(rng, 4));
      const auto j = static_cast<NodeIndex>((i + 1 + UniformIndex(rng, 3)) % 4);
      const auto loss = [&](const EmbeddingTable& r) {
        return BprTripleLoss(r, u, i, j);
      };
      bpr.values.push_back(RelativeError(
          BprTripleGradient(inst.embeddings, u, i, j).values(),
          FiniteDifferenceGradient(loss, inst.embeddings).values()));
    }
    Finish(bpr, timer, true);
    results.push_back(std::move(bpr));
  }
  {
    const Timer timer;
    SuiteResult adv{"fd_adversarial", {}, 1e-6};
    for (int k = 0; k < instances; ++k) {
      const RandomInstance inst =
          MakeRandomInstance(5, 6, 2, 0.3, 1.0, DeriveSeed(seed, "fd-adv", k));
      TargetSpec targets{{static_cast<NodeIndex>(UniformIndex(rng, 6))}};
      const auto loss = [&](const EmbeddingTable& r) {
        return AdversarialLoss(r, inst.dataset, targets);
      };
      adv.values.push_back(RelativeError(
          AdversarialGradient(inst.embeddings, inst.dataset, targets).values(),
          FiniteDifferenceGradient(loss, inst.embeddings).values()));
    }
    Finish(adv, timer, true);
    results.push_back(std::move(adv));
  }
  return results;
}

std::string SuiteResultsJson(const std::vector<SuiteResult>& results) {
  nlohmann::ordered_json json = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json entry;
    entry["suite"] = r.name;
    entry["passed"] = r.passed;
    entry["threshold"] = r.threshold;
    entry["count"] = r.values.size();
    entry["values"] = r.values;
    entry["seconds"] = r.seconds;
    json.push_back(std::move(entry));
  }
  return json.dump(2) + "\n";
}

}  // namespace gpatk

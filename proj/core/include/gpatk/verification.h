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

#ifndef GPATK_VERIFICATION_H_
#define GPATK_VERIFICATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gpatk/data.h"
#include "gpatk/embedding.h"

namespace gpatk {

// Seeded random instance: R entries uniform in [-scale, scale], each pair
// interacted with probability `density`.
struct RandomInstance {
  InteractionDataset dataset;
  EmbeddingTable embeddings;
};

RandomInstance MakeRandomInstance(std::size_t n_users, std::size_t n_items,
                                  std::size_t dim, double density,
                                  double scale, std::uint64_t seed);

// Central differences of a scalar function of the embedding table.
GradientBuffer FiniteDifferenceGradient(
    const std::function<double(const EmbeddingTable&)>& loss,
    const EmbeddingTable& at, double step = 1e-5);

// ||a - b||_F / max(||b||_F, tiny).
double RelativeError(const Matrix& a, const Matrix& b);

struct SuiteResult {
  std::string name;
  std::vector<double> values;
  double threshold = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

// Message-passing gradient vs the pairwise analytic gradient: max absolute
// difference per instance (n, m <= 8, d <= 4), threshold 1e-12.
SuiteResult RunMessagePassingSuite(int instances, std::uint64_t seed);

// Exact two-step residuals (n = m in {2, 3, 4}, d = 2, lr = 0.01),
// threshold 1e-8. Singular instances are regenerated.
SuiteResult RunTwoStepSuite(int instances, std::uint64_t seed);

// Relative error of the analytic BCE, BPR-triple and adversarial gradients
// against central differences, threshold 1e-6.
std::vector<SuiteResult> RunFiniteDifferenceSuites(int instances,
                                                   std::uint64_t seed);

std::string SuiteResultsJson(const std::vector<SuiteResult>& results);

}  // namespace gpatk

#endif  // GPATK_VERIFICATION_H_

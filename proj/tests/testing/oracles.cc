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

#include "testing/oracles.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace gpatk::testing {
namespace {

double LogisticOracle(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Dense Stack(const Dense& users, const Dense& items) {
  Dense out(users.rows() + items.rows(), users.cols());
  out << users, items;
  return out;
}

// dL/dS entrywise.
Dense ScoreCoefficients(const Dense& users, const Dense& items,
                        const Dense& y, double beta) {
  const Dense s = users * items.transpose();
  Dense c(s.rows(), s.cols());
  for (int u = 0; u < s.rows(); ++u) {
    for (int i = 0; i < s.cols(); ++i) {
      c(u, i) = y(u, i) > 0.5 ? -LogisticOracle(-s(u, i))
                              : beta * LogisticOracle(s(u, i));
    }
  }
  return c;
}

Dense GradientOf(const Dense& stacked, int n, const Dense& y, double beta) {
  const Dense users = stacked.topRows(n);
  const Dense items = stacked.bottomRows(stacked.rows() - n);
  return BceGradientOracle(users, items, y, beta);
}

Dense AGradOf(const Dense& stacked, int n, const Dense& y, double beta) {
  return AGradOracle(stacked.topRows(n),
                     stacked.bottomRows(stacked.rows() - n), y, beta);
}

}  // namespace

Dense InteractionMatrix(int n, int m, const EdgeList& edges) {
  Dense y = Dense::Zero(n, m);
  for (const auto& [u, i] : edges) y(u, i) = 1.0;
  return y;
}

double BceLossOracle(const Dense& users, const Dense& items, const Dense& y,
                     double beta) {
  const Dense s = users * items.transpose();
  double loss = 0.0;
  for (int u = 0; u < s.rows(); ++u) {
    for (int i = 0; i < s.cols(); ++i) {
      loss += y(u, i) > 0.5 ? std::log1p(std::exp(-s(u, i)))
                            : beta * std::log1p(std::exp(s(u, i)));
    }
  }
  return loss;
}

Dense BceGradientOracle(const Dense& users, const Dense& items,
                        const Dense& y, double beta) {
  const Dense c = ScoreCoefficients(users, items, y, beta);
  return Stack(c * items, c.transpose() * users);
}

Dense AGradOracle(const Dense& users, const Dense& items, const Dense& y,
                  double beta) {
  const Dense p = -ScoreCoefficients(users, items, y, beta);
  const auto n = users.rows();
  const auto m = items.rows();
  Dense a = Dense::Zero(n + m, n + m);
  a.topRightCorner(n, m) = p;
  a.bottomLeftCorner(m, n) = p.transpose();
  return a;
}

TwoStepCheck TwoStepOracle(const Dense& stacked, int n, const Dense& y,
                           double lr, double beta) {
  const Dense g0 = GradientOf(stacked, n, y, beta);
  const Dense r1 = stacked - lr * g0;
  const Dense r2 = r1 - lr * GradientOf(r1, n, y, beta);
  const Dense a0 = AGradOf(stacked, n, y, beta);
  const Dense a1 = AGradOf(r1, n, y, beta);
  const Dense eye = Dense::Identity(a0.rows(), a0.cols());
  const Dense agp = 2.0 * eye + lr * a1 + (a1 - a0) * a0.inverse();
  TwoStepCheck check;
  check.two_sgd = r2;
  check.one_gp = stacked - lr * agp * g0;
  check.residual = (check.one_gp - check.two_sgd).norm();
  return check;
}

Dense GradientPassingOracle(const Dense& stacked, const Dense& gradient,
                            int n, const EdgeList& edges, int layers,
                            double xi_odd, double xi_even, double alpha_odd,
                            double alpha_even) {
  const auto size = stacked.rows();
  std::vector<double> degree(static_cast<std::size_t>(size), 0.0);
  for (const auto& [u, i] : edges) {
    degree[u] += 1.0;
    degree[n + i] += 1.0;
  }
  const auto adjacency = [&](double xi) {
    Dense a = Dense::Zero(size, size);
    for (const auto& [u, i] : edges) {
      const double cond = stacked.row(u).dot(gradient.row(n + i)) +
                          stacked.row(n + i).dot(gradient.row(u));
      if (cond > xi) {
        const double w = 1.0 / std::sqrt(degree[u] * degree[n + i]);
        a(u, n + i) = w;
        a(n + i, u) = w;
      }
    }
    return a;
  };
  const Dense odd = adjacency(xi_odd);
  const Dense even = adjacency(xi_even);
  Dense out = gradient;
  Dense power = Dense::Identity(size, size);
  for (int hop = 1; hop <= 2 * layers - 1; ++hop) {
    power = power * odd;
    if (hop % 2 == 1) out += alpha_odd * power * gradient;
  }
  power = Dense::Identity(size, size);
  for (int hop = 1; hop <= 2 * layers; ++hop) {
    power = power * even;
    if (hop % 2 == 0) out += alpha_even * power * gradient;
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> KCoreOracle(
    std::vector<std::pair<std::string, std::string>> pairs, int k) {
  std::set<std::pair<std::string, std::string>> current(pairs.begin(),
                                                         pairs.end());
  while (true) {
    std::map<std::string, int> users;
    std::map<std::string, int> items;
    for (const auto& [u, i] : current) {
      ++users[u];
      ++items[i];
    }
    std::set<std::pair<std::string, std::string>> next;
    for (const auto& p : current) {
      if (users[p.first] >= k && items[p.second] >= k) next.insert(p);
    }
    if (next.size() == current.size()) break;
    current = std::move(next);
  }
  return {current.begin(), current.end()};
}

std::vector<int> RankingOracle(const Dense& users, const Dense& items,
                               const Dense& y, int user) {
  std::vector<std::pair<double, int>> scored;
  for (int j = 0; j < items.rows(); ++j) {
    if (y(user, j) > 0.5) continue;
    scored.emplace_back(users.row(user).dot(items.row(j)), j);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> ranking;
  for (const auto& [score, j] : scored) ranking.push_back(j);
  return ranking;
}

double HitRatioOracle(const Dense& users, const Dense& items, const Dense& y,
                      int n_real, int target, int k) {
  int eligible = 0;
  int hits = 0;
  for (int u = 0; u < n_real; ++u) {
    if (y(u, target) > 0.5) continue;
    ++eligible;
    const std::vector<int> ranking = RankingOracle(users, items, y, u);
    for (int r = 0; r < k && r < static_cast<int>(ranking.size()); ++r) {
      if (ranking[r] == target) ++hits;
    }
  }
  if (eligible == 0) return -1.0;
  return static_cast<double>(hits) / eligible;
}

double RecallOracle(const Dense& users, const Dense& items, const Dense& y,
                    int n_real, const std::vector<int>& targets, int k) {
  int eligible = 0;
  double total = 0.0;
  for (int u = 0; u < n_real; ++u) {
    int open = 0;
    for (int t : targets) open += y(u, t) > 0.5 ? 0 : 1;
    if (open == 0) continue;
    ++eligible;
    const std::vector<int> ranking = RankingOracle(users, items, y, u);
    int hits = 0;
    for (int r = 0; r < k && r < static_cast<int>(ranking.size()); ++r) {
      hits += std::count(targets.begin(), targets.end(), ranking[r]) > 0;
    }
    total += static_cast<double>(hits) / open;
  }
  if (eligible == 0) return -1.0;
  return total / eligible;
}

double JaccardOracle(const std::vector<std::set<int>>& a,
                     const std::vector<std::set<int>>& b) {
  double total = 0.0;
  for (std::size_t u = 0; u < a.size(); ++u) {
    std::set<int> both;
    std::set<int> either = a[u];
    for (int x : b[u]) {
      if (a[u].count(x)) both.insert(x);
      either.insert(x);
    }
    total += either.empty() ? 1.0
                            : static_cast<double>(both.size()) / either.size();
  }
  return total / static_cast<double>(a.size());
}

}  // namespace gpatk::testing

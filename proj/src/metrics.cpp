// Copyright 2026 The ttsdiag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ttsdiag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ttsdiag/error.hpp"

namespace ttsdiag {

ScoredSet::ScoredSet(std::vector<ScoredPair> pairs) : pairs_(std::move(pairs)) {
  for (const ScoredPair& p : pairs_) {
    if (p.label != 0 && p.label != 1) {
      throw Error(ErrorCode::InvalidArgument, "label must be 0 or 1");
    }
    if (!std::isfinite(p.score)) throw Error(ErrorCode::InvalidArgument, "score must be finite");
    positives_ += static_cast<std::size_t>(p.label);
  }
  if (positives_ == 0 || positives_ == pairs_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "scored set needs at least one positive and one negative");
  }
}

ScoredSet::ScoredSet(std::span<const double> scores, std::span<const int> labels)
    : ScoredSet([&] {
        if (scores.size() != labels.size()) {
          throw Error(ErrorCode::InvalidArgument, "scores and labels differ in length");
        }
        std::vector<ScoredPair> pairs(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) pairs[i] = {scores[i], labels[i]};
        return pairs;
      }()) {}

double auc(const ScoredSet& s) {
  std::vector<ScoredPair> sorted(s.pairs().begin(), s.pairs().end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.score < b.score; });

  // Doubled midranks keep the rank sum integral.
  long long rank_sum_x2 = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    long long group_pos = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      group_pos += sorted[j].label;
      ++j;
    }
    // ranks i+1 .. j, doubled midrank = i + 1 + j
    rank_sum_x2 += group_pos * static_cast<long long>(i + 1 + j);
    i = j;
  }
  const auto n1 = static_cast<long long>(s.positives());
  const auto n0 = static_cast<long long>(s.negatives());
  const long long u_x2 = rank_sum_x2 - n1 * (n1 + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(n1) * static_cast<double>(n0));
}

double average_precision(const ScoredSet& s) {
  std::vector<ScoredPair> sorted(s.pairs().begin(), s.pairs().end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.score > b.score; });

  const double total_pos = static_cast<double>(s.positives());
  double tp = 0;
  double fp = 0;
  double prev_recall = 0;
  double ap = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label == 1 ? tp : fp) += 1;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

PowerLawFit fit_power_law(std::span<const PowerLawPoint> points) {
  std::set<int> distinct;
  for (const PowerLawPoint& p : points) {
    if (p.n < 1) throw Error(ErrorCode::InvalidArgument, "power-law fit needs n >= 1");
    if (!(p.metric < 1)) {
      throw Error(ErrorCode::InvalidArgument,
                  "power-law fit needs metric < 1 (got " + std::to_string(p.metric) + ")");
    }
    distinct.insert(p.n);
  }
  if (distinct.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "power-law fit needs at least two distinct n");
  }

  const auto m = static_cast<double>(points.size());
  std::vector<double> x, y;
  for (const PowerLawPoint& p : points) {
    x.push_back(std::log(static_cast<double>(p.n)));
    y.push_back(std::log(1.0 - p.metric));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    sse += r * r;
  }
  return PowerLawFit{.alpha = std::exp(intercept), .beta = -slope, .rmse = std::sqrt(sse / m)};
}

}  // namespace ttsdiag

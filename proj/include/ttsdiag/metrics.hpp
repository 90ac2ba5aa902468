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

#pragma once

#include <span>
#include <vector>

namespace ttsdiag {

struct ScoredPair {
  double score = 0;
  int label = 0;
};

/// Scores with binary labels; needs at least one pair of each label.
class ScoredSet {
 public:
  ScoredSet() = default;
  explicit ScoredSet(std::vector<ScoredPair> pairs);
  ScoredSet(std::span<const double> scores, std::span<const int> labels);

  std::span<const ScoredPair> pairs() const { return pairs_; }
  std::size_t positives() const { return positives_; }
  std::size_t negatives() const { return pairs_.size() - positives_; }

 private:
  std::vector<ScoredPair> pairs_;
  std::size_t positives_ = 0;
};

/// Mann-Whitney AUC with ties counted as one half.
double auc(const ScoredSet& s);

/// Non-interpolated AP; equal scores form one threshold group.
double average_precision(const ScoredSet& s);

struct PowerLawPoint {
  int n = 1;
  double metric = 0;
};

/// err(n) = alpha * n^(-beta) on err = 1 - metric, fitted by least squares in
/// log-log space. rmse is measured in log space.
struct PowerLawFit {
  double alpha = 0;
  double beta = 0;
  double rmse = 0;
};

/// Throws Error(InvalidArgument) with fewer than two distinct n, n < 1, or
/// any metric >= 1.
PowerLawFit fit_power_law(std::span<const PowerLawPoint> points);

}  // namespace ttsdiag

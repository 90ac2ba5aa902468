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
#include <string>

#include "ttsdiag/pipeline.hpp"

namespace ttsdiag {

/// Indicator-average estimate of p(y=1|x) over one sample's answers.
struct DiagnosisScore {
  std::string sample_id;
  double estimate = 0.5;
  int n_total = 0;
  int n_valid = 0;
  bool degraded = false;

  bool operator==(const DiagnosisScore&) const = default;
};

/// Fraction of Class1 among the parseable answer-bearing records; Stage1
/// records are ignored. Unparseable answers leave both numerator and
/// denominator, and an all-unparseable set scores 0.5 (degraded).
/// Throws Error(InvalidArgument) for mixed sample ids or no answers.
DiagnosisScore estimate_probability(std::span<const GenerationRecord> records);

}  // namespace ttsdiag

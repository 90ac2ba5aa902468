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

#include "ttsdiag/aggregate.hpp"

namespace ttsdiag {

DiagnosisScore estimate_probability(std::span<const GenerationRecord> records) {
  DiagnosisScore score;
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "no generation records");
  score.sample_id = records.front().sample_id;

  int positives = 0;
  for (const GenerationRecord& r : records) {
    if (r.sample_id != score.sample_id) {
      throw Error(ErrorCode::InvalidArgument, "records mix sample ids '" + score.sample_id +
                                                  "' and '" + r.sample_id + "'");
    }
    if (!r.answer_bearing()) continue;
    ++score.n_total;
    const ParsedAnswer a = r.parsed.value_or(ParsedAnswer::Unparseable);
    if (a == ParsedAnswer::Unparseable) continue;
    ++score.n_valid;
    if (a == ParsedAnswer::Class1) ++positives;
  }
  if (score.n_total == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "sample '" + score.sample_id + "' has no answer-bearing records");
  }
  score.degraded = score.n_valid < score.n_total;
  score.estimate = score.n_valid == 0 ? 0.5
                                      : static_cast<double>(positives) / score.n_valid;
  return score;
}

}  // namespace ttsdiag

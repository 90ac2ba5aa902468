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

#include <atomic>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ttsdiag/aggregate.hpp"
#include "ttsdiag/mockmodel.hpp"
#include "ttsdiag/model_client.hpp"
#include "ttsdiag/pipeline.hpp"

namespace ttsdiag::testing {

/// CompletionSource that calls the mock's wire handler directly on the
/// serialized request, skipping only the socket.
class InProcessMock final : public CompletionSource {
 public:
  explicit InProcessMock(MockConfig cfg) : model_(std::move(cfg)) {}
  std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                         std::span<const ChatRequest> reqs) override;
  long calls() const { return calls_.load(); }

 private:
  MockModel model_;
  std::atomic<long> calls_{0};
};

/// Record with only the fields the estimator reads.
GenerationRecord answer_record(const std::string& id, std::optional<ParsedAnswer> parsed,
                               GenerationStage stage = GenerationStage::Direct, int index = 0);

// Independent oracles.

/// Pairwise count over all (positive, negative) pairs, ties worth one half.
double oracle_auc(std::span<const double> scores, std::span<const int> labels);
/// Walks every distinct score threshold from high to low and sums
/// precision at that threshold times the recall it adds.
double oracle_ap(std::span<const double> scores, std::span<const int> labels);
/// Counts answers by hand: {ones, zeros, unparseable}.
struct AnswerCounts {
  int ones = 0;
  int zeros = 0;
  int bad = 0;
};
AnswerCounts recount(std::span<const GenerationRecord> records);

}  // namespace ttsdiag::testing

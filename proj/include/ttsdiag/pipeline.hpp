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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttsdiag/dataset.hpp"
#include "ttsdiag/model_client.hpp"
#include "ttsdiag/prompting.hpp"

namespace ttsdiag {

enum class ParsedAnswer { Class0, Class1, Unparseable };
enum class GenerationStage { Direct, Stage1, Stage2 };

std::string_view to_string(ParsedAnswer a);
std::string_view to_string(GenerationStage s);
ParsedAnswer parse_parsed_answer(std::string_view s);
GenerationStage parse_generation_stage(std::string_view s);

inline constexpr int kDefaultStage1MaxTokens = 512;
inline constexpr int kDefaultStage2MaxTokens = 256;
inline constexpr double kDefaultTemperature = 0.7;

struct MethodConfig {
  std::string name;  // unique within a run; defaults to the method kind
  Method method = Method::DescribeThenDiagnose;
  Stage1Variant stage1_variant = Stage1Variant::Unconstrained;
  int num_samples = 1;
  double temperature = kDefaultTemperature;  // Stage-1 / direct sampling
  double stage2_temperature = 0.0;           // greedy by default
  EndpointConfig stage1_endpoint;
  EndpointConfig stage2_endpoint;  // ignored unless DescribeThenDiagnose
  bool greedy_single = false;      // n=1 cell from an extra temperature-0 generation

  std::string label() const { return name.empty() ? std::string(to_string(method)) : name; }
  void validate() const;
};

struct GenerationRecord {
  std::string sample_id;
  std::string method;  // MethodConfig::label()
  GenerationStage stage = GenerationStage::Direct;
  int index = 0;
  std::string prompt_digest;
  std::string raw_text;
  std::optional<ParsedAnswer> parsed;  // absent for Stage1
  FinishReason finish_reason = FinishReason::Stop;
  std::string error;
  bool greedy = false;

  bool answer_bearing() const { return stage != GenerationStage::Stage1; }
  bool operator==(const GenerationRecord&) const = default;
};

/// Verdict of the last complete \boxed{...} token: Class0/Class1 when its
/// content is exactly "0"/"1", Unparseable otherwise or when none exists.
ParsedAnswer parse_boxed_answer(std::string_view text);

std::vector<GenerationRecord> run_zero_shot(const Sample& sample, const TaskSpec& task,
                                            const MethodConfig& cfg, CompletionSource& source,
                                            const PromptTemplates& t = PromptTemplates::builtin());

std::vector<GenerationRecord> run_one_stage_cot(
    const Sample& sample, const TaskSpec& task, const MethodConfig& cfg, CompletionSource& source,
    const PromptTemplates& t = PromptTemplates::builtin());

/// N Stage-1 descriptions, then one Stage-2 diagnosis per description.
/// Returns the N Stage1 records followed by the N Stage2 records.
std::vector<GenerationRecord> run_describe_then_diagnose(
    const Sample& sample, const TaskSpec& task, const MethodConfig& cfg, CompletionSource& source,
    const PromptTemplates& t = PromptTemplates::builtin());

/// Dispatches on cfg.method.
std::vector<GenerationRecord> run_method(const Sample& sample, const TaskSpec& task,
                                         const MethodConfig& cfg, CompletionSource& source,
                                         const PromptTemplates& t = PromptTemplates::builtin());

}  // namespace ttsdiag

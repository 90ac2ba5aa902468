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

#include <map>
#include <string>
#include <string_view>

#include "ttsdiag/dataset.hpp"

namespace ttsdiag {

enum class Method { ZeroShot, OneStageCoT, DescribeThenDiagnose };
enum class Stage1Variant { Unconstrained, Dictated };
enum class AnswerFormat { BoxedBinary, FreeText };

std::string_view to_string(Method m);
std::string_view to_string(Stage1Variant v);
std::string_view to_string(AnswerFormat f);
Method parse_method(std::string_view s);
Stage1Variant parse_stage1_variant(std::string_view s);

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  bool wants_image = false;
  AnswerFormat answer_format = AnswerFormat::FreeText;

  /// SHA-256 over a canonical serialization of all four fields.
  std::string digest() const;

  bool operator==(const PromptBundle&) const = default;
};

/// Versioned template set. Keys: zero_shot, cot, stage1_unconstrained,
/// stage1_dictated, stage2, boxed_instruction, and optionally system.
/// Placeholders: {modality}, {class0}, {class1}, {features}.
class PromptTemplates {
 public:
  /// The templates compiled into the library; identical to the shipped
  /// prompts/default_prompts.json.
  static const PromptTemplates& builtin();

  /// Throws Error(Config) for missing keys or templates that break the
  /// neutrality / boxed-format contracts.
  static PromptTemplates from_json(std::string_view text, const std::string& origin = "<memory>");
  static PromptTemplates from_file(const std::string& path);

  const std::string& get(const std::string& key) const;
  std::string to_json() const;

  /// SHA-256 of to_json(); recorded in run provenance.
  std::string digest() const;

 private:
  std::map<std::string, std::string> entries_;
};

inline constexpr std::string_view kBoxedToken = "\\boxed{";

/// Single-pass placeholder substitution. Substituted values are never
/// rescanned; braces that do not name a known placeholder are left as-is.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values);

PromptBundle build_zero_shot(const TaskSpec& task,
                             const PromptTemplates& t = PromptTemplates::builtin());
PromptBundle build_one_stage_cot(const TaskSpec& task,
                                 const PromptTemplates& t = PromptTemplates::builtin());
PromptBundle build_stage1(const TaskSpec& task, Stage1Variant variant,
                          const PromptTemplates& t = PromptTemplates::builtin());
/// Throws Error(InvalidArgument) when `features_text` is empty.
PromptBundle build_stage2(const TaskSpec& task, std::string_view features_text,
                          const PromptTemplates& t = PromptTemplates::builtin());

}  // namespace ttsdiag

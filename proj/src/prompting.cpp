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

#include "ttsdiag/prompting.hpp"

#include <array>

#include <json.hpp>

#include "ttsdiag/digest.hpp"
#include "ttsdiag/error.hpp"

namespace ttsdiag {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 6> kRequiredKeys = {
    "zero_shot", "cot", "stage1_unconstrained", "stage1_dictated", "stage2", "boxed_instruction"};

constexpr std::array<std::string_view, 4> kPlaceholders = {"modality", "class0", "class1",
                                                           "features"};

// Keep in sync with prompts/default_prompts.json (checked by the tests).
constexpr const char* kBuiltinJson = R"json({
  "boxed_instruction": "Strictly adhere to the format by outputting only the final grade inside \\boxed{} and nothing else.",
  "cot": "Given a {modality}, classify it as 0 ({class0}) or 1 ({class1}). Let's think step by step.",
  "stage1_dictated": "Include only features directly associated with identifying {class1}.",
  "stage1_unconstrained": "Describe visual features detected in the image.",
  "stage2": "Decide which class best matches the visual features described: 0 ({class0}) or 1 ({class1}). **Features:** {features}",
  "system": "",
  "zero_shot": "Given a {modality}, classify it as 0 ({class0}) or 1 ({class1})."
})json";

bool has_placeholder(std::string_view text) {
  for (auto name : kPlaceholders) {
    std::string token = "{" + std::string(name) + "}";
    if (text.find(token) != std::string_view::npos) return true;
  }
  return false;
}

std::map<std::string, std::string> task_values(const TaskSpec& task) {
  return {{"modality", task.modality_phrase},
          {"class0", task.class0_name},
          {"class1", task.class1_name}};
}

PromptBundle boxed_bundle(const PromptTemplates& t, std::string body, bool wants_image) {
  body += '\n';
  body += t.get("boxed_instruction");
  return PromptBundle{.system_text = t.get("system"),
                      .user_text = std::move(body),
                      .wants_image = wants_image,
                      .answer_format = AnswerFormat::BoxedBinary};
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ZeroShot: return "zero_shot";
    case Method::OneStageCoT: return "cot";
    case Method::DescribeThenDiagnose: return "describe_then_diagnose";
  }
  return "unknown";
}

std::string_view to_string(Stage1Variant v) {
  return v == Stage1Variant::Dictated ? "dictated" : "unconstrained";
}

std::string_view to_string(AnswerFormat f) {
  return f == AnswerFormat::BoxedBinary ? "boxed_binary" : "free_text";
}

Method parse_method(std::string_view s) {
  if (s == "zero_shot") return Method::ZeroShot;
  if (s == "cot" || s == "one_stage_cot") return Method::OneStageCoT;
  if (s == "describe_then_diagnose" || s == "two_stage") return Method::DescribeThenDiagnose;
  throw Error(ErrorCode::Config, "unknown method '" + std::string(s) +
                                     "' (expected zero_shot, cot or describe_then_diagnose)");
}

Stage1Variant parse_stage1_variant(std::string_view s) {
  if (s == "unconstrained") return Stage1Variant::Unconstrained;
  if (s == "dictated") return Stage1Variant::Dictated;
  throw Error(ErrorCode::Config, "unknown stage1 variant '" + std::string(s) +
                                     "' (expected unconstrained or dictated)");
}

std::string PromptBundle::digest() const {
  json j = {{"answer_format", to_string(answer_format)},
            {"system", system_text},
            {"user", user_text},
            {"wants_image", wants_image}};
  return sha256_hex(j.dump());
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = from_json(kBuiltinJson, "<builtin>");
  return templates;
}

PromptTemplates PromptTemplates::from_json(std::string_view text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, origin + ": malformed prompt file: " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Config, origin + ": prompt file must be an object");

  PromptTemplates t;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) {
      throw Error(ErrorCode::Config, origin + ": template '" + it.key() + "' must be a string");
    }
    t.entries_[it.key()] = it.value().get<std::string>();
  }
  for (const char* key : kRequiredKeys) {
    if (!t.entries_.contains(key)) {
      throw Error(ErrorCode::Config, origin + ": missing template '" + key + "'");
    }
  }
  t.entries_.try_emplace("system", "");

  if (has_placeholder(t.entries_["stage1_unconstrained"])) {
    throw Error(ErrorCode::Config,
                origin + ": stage1_unconstrained must not contain placeholders");
  }
  if (t.entries_["stage2"].find("{features}") == std::string::npos) {
    throw Error(ErrorCode::Config, origin + ": stage2 must contain {features}");
  }
  if (t.entries_["boxed_instruction"].find(kBoxedToken) == std::string::npos) {
    throw Error(ErrorCode::Config, origin + ": boxed_instruction must contain \\boxed{");
  }
  return t;
}

PromptTemplates PromptTemplates::from_file(const std::string& path) {
  std::string text;
  try {
    text = read_file_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("prompt file: ") + e.what());
  }
  return from_json(text, path);
}

const std::string& PromptTemplates::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::Config, "unknown template '" + key + "'");
  return it->second;
}

std::string PromptTemplates::to_json() const {
  json j(entries_);
  return j.dump();
}

std::string PromptTemplates::digest() const { return sha256_hex(to_json()); }

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        if (auto it = values.find(name); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

PromptBundle build_zero_shot(const TaskSpec& task, const PromptTemplates& t) {
  return boxed_bundle(t, substitute(t.get("zero_shot"), task_values(task)), true);
}

PromptBundle build_one_stage_cot(const TaskSpec& task, const PromptTemplates& t) {
  return boxed_bundle(t, substitute(t.get("cot"), task_values(task)), true);
}

PromptBundle build_stage1(const TaskSpec& task, Stage1Variant variant, const PromptTemplates& t) {
  std::string text = t.get("stage1_unconstrained");
  if (variant == Stage1Variant::Dictated) {
    text += ' ';
    text += substitute(t.get("stage1_dictated"), {{"class1", task.class1_name}});
  }
  return PromptBundle{.system_text = t.get("system"),
                      .user_text = std::move(text),
                      .wants_image = true,
                      .answer_format = AnswerFormat::FreeText};
}

PromptBundle build_stage2(const TaskSpec& task, std::string_view features_text,
                          const PromptTemplates& t) {
  if (features_text.empty()) {
    throw Error(ErrorCode::InvalidArgument, "stage-2 prompt needs non-empty features text");
  }
  auto values = task_values(task);
  values["features"] = std::string(features_text);
  return boxed_bundle(t, substitute(t.get("stage2"), values), false);
}

}  // namespace ttsdiag

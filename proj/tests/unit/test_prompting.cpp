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

#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "ttsdiag/digest.hpp"
#include "ttsdiag/error.hpp"
#include "ttsdiag/prompting.hpp"

using namespace ttsdiag;
using namespace ttsdiag::testing;

namespace {

const TaskSpec kPneumonia{"pneumoniamnist", "normal", "pneumonia", "chest X-ray image"};
const TaskSpec kRetina{"retinamnist", "non-referable", "referable diabetic retinopathy",
                       "retinal fundus image"};
const TaskSpec kPathology{"breastmnist", "benign", "malignant", "breast ultrasound image"};

const std::string kBoxed =
    "Strictly adhere to the format by outputting only the final grade inside \\boxed{} and "
    "nothing else.";

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string random_word(std::mt19937& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<int> len(3, 10), ch(0, 25);
  std::string s;
  for (int i = len(rng); i > 0; --i) s.push_back(alphabet[static_cast<std::size_t>(ch(rng))]);
  return s;
}

}  // namespace

TEST_SUITE("prompting") {
  TEST_CASE("zero-shot prompt") {
    const PromptBundle p = build_zero_shot(kPneumonia);
    CHECK(p.user_text.find("0 (normal) or 1 (pneumonia)") != std::string::npos);
    CHECK(p.user_text.find("chest X-ray image") != std::string::npos);
    CHECK(p.user_text.find(kBoxed) != std::string::npos);
    CHECK(p.wants_image);
    CHECK(p.answer_format == AnswerFormat::BoxedBinary);

    const PromptBundle q = build_zero_shot(kPathology);
    CHECK(count(q.user_text, "(benign)") == 1);
    CHECK(count(q.user_text, "(malignant)") == 1);
  }

  TEST_CASE("one-stage CoT differs from zero-shot only by the CoT phrase") {
    const PromptBundle zs = build_zero_shot(kPneumonia);
    const PromptBundle cot = build_one_stage_cot(kPneumonia);
    CHECK(cot.user_text.find("Let's think step by step.") != std::string::npos);
    CHECK(cot.answer_format == AnswerFormat::BoxedBinary);
    CHECK(cot.wants_image);
    std::string stripped = cot.user_text;
    stripped.erase(stripped.find(" Let's think step by step."), 26);
    CHECK(stripped == zs.user_text);
  }

  TEST_CASE("stage-1 prompts") {
    const PromptBundle u = build_stage1(kPneumonia, Stage1Variant::Unconstrained);
    CHECK(u.user_text == "Describe visual features detected in the image.");
    CHECK(u.user_text.find("pneumonia") == std::string::npos);
    CHECK(u.wants_image);
    CHECK(u.answer_format == AnswerFormat::FreeText);
    CHECK(build_stage1(kRetina, Stage1Variant::Unconstrained) == u);

    const PromptBundle d = build_stage1(kPneumonia, Stage1Variant::Dictated);
    CHECK(d.user_text.find(u.user_text) == 0);
    CHECK(d.user_text.find("Include only features directly associated with identifying pneumonia") !=
          std::string::npos);
    CHECK(d.digest() != u.digest());
  }

  TEST_CASE("stage-2 prompt") {
    const PromptBundle p = build_stage2(kPneumonia, "bilateral opacities");
    CHECK(p.user_text.find("**Features:** bilateral opacities") != std::string::npos);
    CHECK(p.user_text.find(kBoxed) != std::string::npos);
    CHECK_FALSE(p.wants_image);
    CHECK(p.answer_format == AnswerFormat::BoxedBinary);

    const PromptBundle lit = build_stage2(kPneumonia, "see {features} and {class1}");
    CHECK(count(lit.user_text, "{features}") == 1);
    CHECK(count(lit.user_text, "{class1}") == 1);

    CHECK_THROWS_AS(build_stage2(kPneumonia, ""), Error);
  }

  TEST_CASE("property: substitution is single pass and exact") {
    std::mt19937 rng(11);
    const std::vector<std::string> tokens = {"{features}", "{class0}", "{class1}", "{modality}",
                                             "{", "}", "{x}"};
    for (int trial = 0; trial < 300; ++trial) {
      TaskSpec task{"d", random_word(rng), random_word(rng), random_word(rng)};
      if (task.class0_name == task.class1_name) continue;
      std::string features = random_word(rng);
      for (int k = 0; k < 3; ++k) {
        features += tokens[rng() % tokens.size()] + random_word(rng);
      }
      const PromptBundle p = build_stage2(task, features);
      // Features appear verbatim once, class names exactly once each in the
      // class list.
      CHECK(count(p.user_text, features) == 1);
      CHECK(p.user_text.find("0 (" + task.class0_name + ") or 1 (" + task.class1_name + ")") !=
            std::string::npos);
      const PromptBundle z = build_zero_shot(task);
      CHECK(count(z.user_text, "(" + task.class0_name + ")") == 1);
      CHECK(count(z.user_text, "(" + task.class1_name + ")") == 1);
      CHECK(z.user_text.find(kBoxed) != std::string::npos);
      // Stage 1 never depends on the task.
      CHECK(build_stage1(task, Stage1Variant::Unconstrained) ==
            build_stage1(kPneumonia, Stage1Variant::Unconstrained));
    }
  }

  TEST_CASE("substitute leaves unknown braces alone") {
    CHECK(substitute("a {b} {c} {", {{"c", "{b}"}}) == "a {b} {b} {");
    CHECK(substitute("{x}{x}", {{"x", "1"}}) == "11");
  }

  TEST_CASE("builtin templates match the shipped prompt file") {
    const PromptTemplates shipped =
        PromptTemplates::from_file(std::string(TTSDIAG_SOURCE_DIR) + "/prompts/default_prompts.json");
    CHECK(shipped.to_json() == PromptTemplates::builtin().to_json());
    CHECK(shipped.digest() == PromptTemplates::builtin().digest());
    CHECK(is_hex_digest(shipped.digest()));
  }

  TEST_CASE("template validation") {
    const std::string base = PromptTemplates::builtin().to_json();
    auto with = [&](const std::string& key, const std::string& value) {
      auto j = nlohmann::json::parse(base);
      j[key] = value;
      return j.dump();
    };
    CHECK_NOTHROW(PromptTemplates::from_json(with("zero_shot", "Classify {modality}: {class0}/{class1}.")));
    CHECK_THROWS_AS(PromptTemplates::from_json(with("stage1_unconstrained", "Describe {class1}.")),
                    Error);
    CHECK_THROWS_AS(PromptTemplates::from_json(with("stage2", "no features slot")), Error);
    CHECK_THROWS_AS(PromptTemplates::from_json(with("boxed_instruction", "answer plainly")), Error);
    auto missing = nlohmann::json::parse(base);
    missing.erase("cot");
    CHECK_THROWS_AS(PromptTemplates::from_json(missing.dump()), Error);
    CHECK_THROWS_AS(PromptTemplates::from_json("{"), Error);
  }

  TEST_CASE("digest covers every field") {
    PromptBundle a = build_zero_shot(kPneumonia);
    PromptBundle b = a;
    CHECK(a.digest() == b.digest());
    b.wants_image = false;
    CHECK(a.digest() != b.digest());
    b = a;
    b.system_text = "x";
    CHECK(a.digest() != b.digest());
    b = a;
    b.answer_format = AnswerFormat::FreeText;
    CHECK(a.digest() != b.digest());
  }

  TEST_CASE("method and variant names") {
    for (Method m : {Method::ZeroShot, Method::OneStageCoT, Method::DescribeThenDiagnose}) {
      CHECK(parse_method(to_string(m)) == m);
    }
    CHECK(parse_stage1_variant("dictated") == Stage1Variant::Dictated);
    CHECK_THROWS_AS(parse_method("three_stage"), Error);
    CHECK_THROWS_AS(parse_stage1_variant("biased"), Error);
  }
}

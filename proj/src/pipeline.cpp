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

#include "ttsdiag/pipeline.hpp"


namespace ttsdiag {

namespace {

std::string tag(const Sample& s, GenerationStage stage, int i) {
  return s.id + "/" + std::string(to_string(stage)) + "/" + std::to_string(i);
}

GenerationRecord make_record(const Sample& sample, const MethodConfig& cfg, GenerationStage stage,
                             int index, const std::string& prompt_digest, const Completion& c) {
  GenerationRecord r;
  r.sample_id = sample.id;
  r.method = cfg.label();
  r.stage = stage;
  r.index = index;
  r.prompt_digest = prompt_digest;
  r.raw_text = c.text;
  r.finish_reason = c.finish_reason;
  r.error = c.error;
  if (stage != GenerationStage::Stage1) {
    r.parsed = c.finish_reason == FinishReason::Error ? ParsedAnswer::Unparseable
                                                      : parse_boxed_answer(c.text);
  }
  return r;
}

std::vector<GenerationRecord> run_direct(const Sample& sample, const MethodConfig& cfg,
                                         const PromptBundle& prompt, CompletionSource& source) {
  const ImagePayload image = encode_image(sample);
  const std::string digest = prompt.digest();

  std::vector<ChatRequest> reqs;
  reqs.reserve(static_cast<std::size_t>(cfg.num_samples));
  for (int i = 0; i < cfg.num_samples; ++i) {
    reqs.push_back(ChatRequest{.prompt = prompt,
                               .image = image,
                               .temperature = cfg.temperature,
                               .index = i,
                               .request_tag = tag(sample, GenerationStage::Direct, i)});
  }
  const auto completions = source.complete_batch(cfg.stage1_endpoint, reqs);

  std::vector<GenerationRecord> out;
  out.reserve(completions.size());
  for (int i = 0; i < cfg.num_samples; ++i) {
    out.push_back(make_record(sample, cfg, GenerationStage::Direct, i, digest,
                              completions[static_cast<std::size_t>(i)]));
  }
  return out;
}

}  // namespace

std::string_view to_string(ParsedAnswer a) {
  switch (a) {
    case ParsedAnswer::Class0: return "0";
    case ParsedAnswer::Class1: return "1";
    case ParsedAnswer::Unparseable: return "unparseable";
  }
  return "unparseable";
}

std::string_view to_string(GenerationStage s) {
  switch (s) {
    case GenerationStage::Direct: return "direct";
    case GenerationStage::Stage1: return "stage1";
    case GenerationStage::Stage2: return "stage2";
  }
  return "direct";
}

ParsedAnswer parse_parsed_answer(std::string_view s) {
  if (s == "0") return ParsedAnswer::Class0;
  if (s == "1") return ParsedAnswer::Class1;
  if (s == "unparseable") return ParsedAnswer::Unparseable;
  throw Error(ErrorCode::InvalidArgument, "unknown parsed answer '" + std::string(s) + "'");
}

GenerationStage parse_generation_stage(std::string_view s) {
  if (s == "direct") return GenerationStage::Direct;
  if (s == "stage1") return GenerationStage::Stage1;
  if (s == "stage2") return GenerationStage::Stage2;
  throw Error(ErrorCode::InvalidArgument, "unknown generation stage '" + std::string(s) + "'");
}

void MethodConfig::validate() const {
  const std::string where = "method '" + label() + "': ";
  if (num_samples < 1) throw Error(ErrorCode::Config, where + "num_samples must be >= 1");
  if (!(temperature >= 0)) throw Error(ErrorCode::Config, where + "temperature must be >= 0");
  if (!(stage2_temperature >= 0)) {
    throw Error(ErrorCode::Config, where + "stage2_temperature must be >= 0");
  }
  stage1_endpoint.validate();
  if (method == Method::DescribeThenDiagnose) stage2_endpoint.validate();
}

ParsedAnswer parse_boxed_answer(std::string_view text) {
  std::optional<std::string_view> last;
  for (auto pos = text.find(kBoxedToken); pos != std::string_view::npos;
       pos = text.find(kBoxedToken, pos + 1)) {
    const auto open = pos + kBoxedToken.size();
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) break;
    last = text.substr(open, close - open);
  }
  if (!last) return ParsedAnswer::Unparseable;
  if (*last == "0") return ParsedAnswer::Class0;
  if (*last == "1") return ParsedAnswer::Class1;
  return ParsedAnswer::Unparseable;
}

std::vector<GenerationRecord> run_zero_shot(const Sample& sample, const TaskSpec& task,
                                            const MethodConfig& cfg, CompletionSource& source,
                                            const PromptTemplates& t) {
  return run_direct(sample, cfg, build_zero_shot(task, t), source);
}

std::vector<GenerationRecord> run_one_stage_cot(const Sample& sample, const TaskSpec& task,
                                                const MethodConfig& cfg, CompletionSource& source,
                                                const PromptTemplates& t) {
  return run_direct(sample, cfg, build_one_stage_cot(task, t), source);
}

std::vector<GenerationRecord> run_describe_then_diagnose(const Sample& sample,
                                                         const TaskSpec& task,
                                                         const MethodConfig& cfg,
                                                         CompletionSource& source,
                                                         const PromptTemplates& t) {
  const ImagePayload image = encode_image(sample);
  const PromptBundle stage1 = build_stage1(task, cfg.stage1_variant, t);
  const std::string stage1_digest = stage1.digest();
  const auto n = static_cast<std::size_t>(cfg.num_samples);

  std::vector<ChatRequest> first;
  first.reserve(n);
  for (int i = 0; i < cfg.num_samples; ++i) {
    first.push_back(ChatRequest{.prompt = stage1,
                                .image = image,
                                .temperature = cfg.temperature,
                                .index = i,
                                .request_tag = tag(sample, GenerationStage::Stage1, i)});
  }
  const auto descriptions = source.complete_batch(cfg.stage1_endpoint, first);

  std::vector<GenerationRecord> out;
  out.reserve(2 * n);
  std::vector<ChatRequest> second;
  std::vector<std::size_t> second_index;  // request position -> generation index
  std::vector<std::string> second_digest;
  for (std::size_t i = 0; i < n; ++i) {
    const Completion& c = descriptions[i];
    out.push_back(make_record(sample, cfg, GenerationStage::Stage1, static_cast<int>(i),
                              stage1_digest, c));
    if (c.finish_reason == FinishReason::Error) continue;
    PromptBundle p = build_stage2(task, c.text, t);
    second_digest.push_back(p.digest());
    second.push_back(ChatRequest{.prompt = std::move(p),
                                 .image = std::nullopt,
                                 .temperature = cfg.stage2_temperature,
                                 .index = static_cast<int>(i),
                                 .request_tag = tag(sample, GenerationStage::Stage2,
                                                    static_cast<int>(i))});
    second_index.push_back(i);
  }
  const auto answers = second.empty() ? std::vector<Completion>{}
                                      : source.complete_batch(cfg.stage2_endpoint, second);

  std::vector<GenerationRecord> stage2(n);
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < second.size(); ++k) {
    const std::size_t i = second_index[k];
    stage2[i] = make_record(sample, cfg, GenerationStage::Stage2, static_cast<int>(i),
                            second_digest[k], answers[k]);
    filled[i] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!filled[i]) {
      GenerationRecord r;
      r.sample_id = sample.id;
      r.method = cfg.label();
      r.stage = GenerationStage::Stage2;
      r.index = static_cast<int>(i);
      r.parsed = ParsedAnswer::Unparseable;
      r.finish_reason = FinishReason::Error;
      r.error = "stage 1 failed; no stage 2 call made: " + descriptions[i].error;
      stage2[i] = std::move(r);
    }
    out.push_back(std::move(stage2[i]));
  }
  return out;
}

std::vector<GenerationRecord> run_method(const Sample& sample, const TaskSpec& task,
                                         const MethodConfig& cfg, CompletionSource& source,
                                         const PromptTemplates& t) {
  switch (cfg.method) {
    case Method::ZeroShot: return run_zero_shot(sample, task, cfg, source, t);
    case Method::OneStageCoT: return run_one_stage_cot(sample, task, cfg, source, t);
    case Method::DescribeThenDiagnose:
      return run_describe_then_diagnose(sample, task, cfg, source, t);
  }
  return {};
}

}  // namespace ttsdiag
